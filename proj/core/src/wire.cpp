#include "hl2ss/wire.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "hl2ss/errors.hpp"

namespace hl2ss {

Pose Pose::identity() noexcept {
    Pose p;
    p.m[0] = p.m[5] = p.m[10] = p.m[15] = 1.0f;
    return p;
}

std::size_t encoded_frame_size(const DataFrame& frame, bool include_pose) noexcept {
    return kFrameHeaderSize + frame.payload.size() + (include_pose ? Pose::kWireSize : 0);
}

void write_pose(ByteWriter& w, const Pose& pose) { w.f32(pose.m); }

Pose read_pose(ByteReader& r) { return Pose{r.f32_array<16>()}; }

void append_frame(Bytes& out, const DataFrame& frame, bool include_pose) {
    if (include_pose && !frame.pose) {
        throw ContractError("encode_frame: pose trailer requested but frame has no pose");
    }
    if (frame.payload.size() > UINT32_MAX) {
        throw ContractError("encode_frame: payload does not fit a u32 size field");
    }
    const std::size_t base = out.size();
    out.resize(base + encoded_frame_size(frame, include_pose));
    std::uint8_t* p = out.data() + base;
    const std::uint64_t ts = frame.timestamp.ticks;
    store_u32(p, static_cast<std::uint32_t>(ts));
    store_u32(p + 4, static_cast<std::uint32_t>(ts >> 32));
    store_u32(p + 8, static_cast<std::uint32_t>(frame.payload.size()));
    if (!frame.payload.empty()) {
        std::memcpy(p + kFrameHeaderSize, frame.payload.data(), frame.payload.size());
    }
    if (include_pose) {
        std::uint8_t* q = p + kFrameHeaderSize + frame.payload.size();
        for (std::size_t i = 0; i < 16; ++i) store_f32(q + 4 * i, frame.pose->m[i]);
    }
}

Bytes encode_frame(const DataFrame& frame, bool include_pose) {
    Bytes out;
    append_frame(out, frame, include_pose);
    return out;
}

std::vector<DataFrame> parse_frames(ByteView data, bool expect_pose, std::size_t max_payload) {
    std::vector<DataFrame> frames;
    ByteReader r(data);
    while (!r.empty()) {
        DataFrame f;
        f.timestamp.ticks = r.u64();
        const std::uint32_t size = r.u32();
        if (size > max_payload) {
            throw ProtocolError("payload size " + std::to_string(size) + " exceeds cap " +
                                std::to_string(max_payload));
        }
        auto payload = r.bytes(size);
        f.payload.assign(payload.begin(), payload.end());
        if (expect_pose) f.pose = read_pose(r);
        frames.push_back(std::move(f));
    }
    return frames;
}

FrameUnpacker::FrameUnpacker(bool expect_pose, std::size_t max_payload)
    : expect_pose_(expect_pose), max_payload_(max_payload) {}

std::size_t FrameUnpacker::want() const noexcept {
    switch (state_) {
        case State::WantHeader: return kFrameHeaderSize;
        case State::WantPayload: return current_.payload.size();
        case State::WantPose: return Pose::kWireSize;
    }
    return 0;
}

void FrameUnpacker::complete_header() {
    const std::uint64_t ts = load_u64(header_.data());
    const std::uint32_t size = load_u32(header_.data() + 8);
    if (size > max_payload_) {
        poisoned_ = true;
        throw ProtocolError("payload size " + std::to_string(size) + " exceeds cap " +
                            std::to_string(max_payload_) + "; stream desynchronized");
    }
    current_ = DataFrame{};
    current_.timestamp.ticks = ts;
    current_.payload.resize(size);
    filled_ = 0;
    state_ = State::WantPayload;
}

void FrameUnpacker::complete_frame(std::vector<DataFrame>& out) {
    if (expect_pose_) {
        Pose p;
        for (std::size_t i = 0; i < 16; ++i) p.m[i] = load_f32(pose_.data() + 4 * i);
        current_.pose = p;
    }
    out.push_back(std::move(current_));
    current_ = DataFrame{};
    filled_ = 0;
    state_ = State::WantHeader;
}

std::vector<DataFrame> FrameUnpacker::feed(ByteView chunk) {
    std::vector<DataFrame> out;
    feed(chunk, out);
    return out;
}

void FrameUnpacker::feed(ByteView chunk, std::vector<DataFrame>& out) {
    if (poisoned_) throw ProtocolError("frame unpacker used after a protocol error");

    std::size_t pos = 0;
    while (pos < chunk.size() || (state_ == State::WantPayload && want() == 0)) {
        const std::size_t need = want() - filled_;
        const std::size_t take = std::min(need, chunk.size() - pos);
        std::uint8_t* dst = nullptr;
        switch (state_) {
            case State::WantHeader: dst = header_.data(); break;
            case State::WantPayload: dst = current_.payload.data(); break;
            case State::WantPose: dst = pose_.data(); break;
        }
        if (take > 0) std::memcpy(dst + filled_, chunk.data() + pos, take);
        pos += take;
        filled_ += take;
        if (filled_ < want()) break;

        switch (state_) {
            case State::WantHeader:
                complete_header();
                break;
            case State::WantPayload:
                filled_ = 0;
                if (expect_pose_) {
                    state_ = State::WantPose;
                } else {
                    complete_frame(out);
                }
                break;
            case State::WantPose:
                complete_frame(out);
                break;
        }
    }
}

}  // namespace hl2ss
