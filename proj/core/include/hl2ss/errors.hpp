#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hl2ss {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (e.g. asked for a pose trailer
/// on a frame that has none).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input values fail validation before anything touches the wire.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Bytes received from a peer do not follow the protocol. The session that
/// produced them cannot continue.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// The peer closed the stream in the middle of a structure.
class TruncatedError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

/// Requested operation is not available for this stream or mode.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Socket level failure: connect refused, reset, bind failure, timeout.
class TransportError : public Error {
public:
    using Error::Error;
};

/// The peer closed the stream cleanly at a frame boundary.
class EndOfStream : public TransportError {
public:
    using TransportError::TransportError;
};

/// The server refused the configuration (closed without streaming).
class HandshakeError : public Error {
public:
    using Error::Error;
};

/// Misuse of a stateful API (closed session, detached sink, stopped mux).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Payload decoding failed. The undecoded payload is kept for inspection.
class CodecError : public Error {
public:
    CodecError(const std::string& what, std::vector<std::uint8_t> raw = {})
        : Error(what), raw_(std::move(raw)) {}

    const std::vector<std::uint8_t>& raw_payload() const noexcept { return raw_; }

private:
    std::vector<std::uint8_t> raw_;
};

}  // namespace hl2ss
