#pragma once

// Common data frame structure shared by every stream port:
//
//   u64 timestamp | u32 payload size | payload | [4x4 f32 pose, row-major]
//
// The pose trailer is present on every frame of a Mode 1 session and never
// otherwise; there is no per-frame flag.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hl2ss/bytes.hpp"

namespace hl2ss {

/// Hundreds of nanoseconds in the device's monotonic clock domain.
struct Timestamp {
    std::uint64_t ticks = 0;

    constexpr auto operator<=>(const Timestamp&) const = default;
};

inline constexpr std::uint64_t kTicksPerSecond = 10'000'000;

/// Row-major 4x4 float matrix. A pose is valid iff its last element is 1;
/// the device reports lost tracking with a last element of 0.
struct Pose {
    std::array<float, 16> m{};

    static constexpr std::size_t kWireSize = 64;

    static Pose identity() noexcept;
    /// All-zero matrix, as sent when tracking is lost.
    static Pose invalid() noexcept { return Pose{}; }

    float& at(int row, int col) noexcept { return m[static_cast<std::size_t>(row * 4 + col)]; }
    float at(int row, int col) const noexcept { return m[static_cast<std::size_t>(row * 4 + col)]; }

    bool valid() const noexcept { return m[15] == 1.0f; }

    bool operator==(const Pose&) const = default;
};

inline bool pose_is_valid(const Pose& p) noexcept { return p.valid(); }

struct DataFrame {
    Timestamp timestamp;
    Bytes payload;
    std::optional<Pose> pose;

    bool operator==(const DataFrame&) const = default;
};

inline constexpr std::size_t kFrameHeaderSize = 12;
inline constexpr std::size_t kDefaultMaxPayload = std::size_t{64} << 20;

std::size_t encoded_frame_size(const DataFrame& frame, bool include_pose) noexcept;

/// Serializes one frame. Throws ContractError when include_pose is set but
/// the frame has no pose.
Bytes encode_frame(const DataFrame& frame, bool include_pose);

/// Appends the serialized frame to an existing buffer.
void append_frame(Bytes& out, const DataFrame& frame, bool include_pose);

void write_pose(ByteWriter& w, const Pose& pose);
Pose read_pose(ByteReader& r);

/// Whole-buffer parse. The buffer must hold an exact sequence of frames;
/// a trailing partial frame raises TruncatedError.
std::vector<DataFrame> parse_frames(ByteView data, bool expect_pose,
                                    std::size_t max_payload = kDefaultMaxPayload);

/// Incremental frame parser for a byte stream delivered in arbitrary chunks.
///
/// Not thread-safe; a single session owns it. After a ProtocolError the
/// unpacker is poisoned and every further feed() rethrows.
class FrameUnpacker {
public:
    enum class State { WantHeader, WantPayload, WantPose };

    explicit FrameUnpacker(bool expect_pose, std::size_t max_payload = kDefaultMaxPayload);

    std::vector<DataFrame> feed(ByteView chunk);

    /// Same as feed() but appends into an existing list.
    void feed(ByteView chunk, std::vector<DataFrame>& out);

    State state() const noexcept { return state_; }
    bool expect_pose() const noexcept { return expect_pose_; }
    std::size_t max_payload() const noexcept { return max_payload_; }

    /// True when no partial frame is pending.
    bool at_frame_boundary() const noexcept { return state_ == State::WantHeader && filled_ == 0; }

private:
    std::size_t want() const noexcept;
    void complete_header();
    void complete_frame(std::vector<DataFrame>& out);

    bool expect_pose_;
    std::size_t max_payload_;
    bool poisoned_ = false;

    State state_ = State::WantHeader;
    std::size_t filled_ = 0;
    std::array<std::uint8_t, kFrameHeaderSize> header_{};
    std::array<std::uint8_t, Pose::kWireSize> pose_{};
    DataFrame current_;
};

}  // namespace hl2ss
