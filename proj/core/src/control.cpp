#include "hl2ss/control.hpp"

#include <array>
#include <string>

#include "hl2ss/errors.hpp"

namespace hl2ss {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

ControlTag control_tag(const ControlCommand& cmd) noexcept {
    return static_cast<ControlTag>(cmd.index());
}

static_assert(std::variant_size_v<ControlCommand> == 7);

Bytes encode_control(const ControlCommand& cmd) {
    ByteWriter w(21);
    w.u8(static_cast<std::uint8_t>(control_tag(cmd)));
    std::visit(overloaded{
                   [&](const SetMarkerState& c) { w.u8(c.enable ? 1 : 0); },
                   [&](const SetFocus& c) { w.u32(c.mode).u32(c.range).u32(c.distance).u32(c.value).u32(c.driver_fallback); },
                   [&](const SetVideoTemporalDenoising& c) { w.u32(c.mode); },
                   [&](const SetWhiteBalancePreset& c) { w.u32(c.preset); },
                   [&](const SetWhiteBalanceValue& c) {
                       if (c.value % kWhiteBalanceStep != 0) {
                           throw ValidationError("white balance value " + std::to_string(c.value) +
                                                 " is not a multiple of 25");
                       }
                       w.u32(c.value / kWhiteBalanceStep);
                   },
                   [&](const SetExposure& c) {
                       if (c.value % kExposureStep != 0) {
                           throw ValidationError("exposure value " + std::to_string(c.value) +
                                                 " is not a multiple of 10");
                       }
                       w.u32(c.mode).u32(c.value / kExposureStep);
                   },
                   [&](const GetVersion&) {},
               },
               cmd);
    return std::move(w).take();
}

std::optional<std::size_t> control_param_size(std::uint8_t tag) noexcept {
    static constexpr std::array<std::size_t, 7> sizes{1, 20, 4, 4, 4, 8, 0};
    if (tag >= sizes.size()) return std::nullopt;
    return sizes[tag];
}

ControlCommand decode_control(ByteView bytes) {
    if (bytes.empty()) throw ProtocolError("empty control command");
    const auto size = control_param_size(bytes[0]);
    if (!size) throw ProtocolError("unknown control command tag " + std::to_string(bytes[0]));
    if (bytes.size() != 1 + *size) {
        throw ProtocolError("control command " + std::to_string(bytes[0]) + " needs " + std::to_string(*size) +
                            " parameter bytes, got " + std::to_string(bytes.size() - 1));
    }
    ByteReader r(bytes.subspan(1));
    switch (static_cast<ControlTag>(bytes[0])) {
        case ControlTag::MARKER_STATE: return SetMarkerState{r.u8() != 0};
        case ControlTag::FOCUS: {
            SetFocus f;
            f.mode = r.u32();
            f.range = r.u32();
            f.distance = r.u32();
            f.value = r.u32();
            f.driver_fallback = r.u32();
            return f;
        }
        case ControlTag::TEMPORAL_DENOISING: return SetVideoTemporalDenoising{r.u32()};
        case ControlTag::WHITE_BALANCE_PRESET: return SetWhiteBalancePreset{r.u32()};
        case ControlTag::WHITE_BALANCE_VALUE: return SetWhiteBalanceValue{r.u32() * kWhiteBalanceStep};
        case ControlTag::EXPOSURE: {
            const auto mode = r.u32();
            return SetExposure{mode, r.u32() * kExposureStep};
        }
        case ControlTag::GET_VERSION: return GetVersion{};
    }
    throw ProtocolError("unknown control command tag");
}

bool control_expects_reply(const ControlCommand& cmd) noexcept {
    return std::holds_alternative<GetVersion>(cmd);
}

Bytes encode_version(const ServerVersion& v) {
    ByteWriter w(kVersionReplySize);
    for (auto x : v) w.u16(x);
    return std::move(w).take();
}

ServerVersion decode_version(ByteView reply) {
    if (reply.size() != kVersionReplySize) {
        throw ProtocolError("version reply must be 8 bytes, got " + std::to_string(reply.size()));
    }
    ByteReader r(reply);
    ServerVersion v{};
    for (auto& x : v) x = r.u16();
    return v;
}

std::string format_version(const ServerVersion& v) {
    return "v" + std::to_string(v[0]) + "." + std::to_string(v[1]) + "." + std::to_string(v[2]) + "." +
           std::to_string(v[3]);
}

// ---------------------------------------------------------------------------

Bytes encode_ipc(const IpcMessage& msg) {
    if (msg.command_id == kIpcReservedCommand) {
        throw ValidationError("ipc command id 0xFFFFFFFF is reserved");
    }
    ByteWriter w(kIpcHeaderSize + msg.params.size());
    w.u32(msg.command_id).u32(static_cast<std::uint32_t>(msg.params.size())).bytes(msg.params);
    return std::move(w).take();
}

namespace {

constexpr std::array<std::string_view, 6> kPrimitiveNames{"sphere", "capsule", "cylinder", "cube", "plane", "quad"};

void check_rgba(const Rgbaf& c) {
    for (float x : c) {
        if (!(x >= 0.0f && x <= 1.0f)) throw ValidationError("rgba components must be in [0, 1]");
    }
}

void check_primitive(std::uint32_t type) {
    if (type > 5) throw ValidationError("primitive type must be 0..5, got " + std::to_string(type));
}

}  // namespace

std::optional<PrimitiveType> primitive_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kPrimitiveNames.size(); ++i) {
        if (kPrimitiveNames[i] == name) return static_cast<PrimitiveType>(i);
    }
    return std::nullopt;
}

std::string_view primitive_name(PrimitiveType type) noexcept {
    const auto i = static_cast<std::size_t>(type);
    return i < kPrimitiveNames.size() ? kPrimitiveNames[i] : "unknown";
}

bool is_scene_command_id(std::uint32_t id) noexcept {
    switch (id) {
        case 0: case 1: case 2: case 4: case 5: case 6: case 7:
        case 16: case 17: case 18: case 19: case 20:
            return true;
        default:
            return false;
    }
}

SceneCommandId scene_command_id(const SceneCommand& cmd) noexcept {
    static constexpr std::array<SceneCommandId, 12> ids{
        SceneCommandId::CREATE_PRIMITIVE, SceneCommandId::SET_ACTIVE,         SceneCommandId::SET_WORLD_TRANSFORM,
        SceneCommandId::SET_COLOR,        SceneCommandId::SET_TEXTURE,        SceneCommandId::CREATE_TEXT,
        SceneCommandId::SET_TEXT,         SceneCommandId::REMOVE,             SceneCommandId::REMOVE_ALL,
        SceneCommandId::BEGIN_DISPLAY_LIST, SceneCommandId::END_DISPLAY_LIST, SceneCommandId::SET_TARGET_MODE,
    };
    return ids[cmd.index()];
}

bool scene_command_creates(const SceneCommand& cmd) noexcept {
    return std::holds_alternative<CreatePrimitive>(cmd) || std::holds_alternative<CreateText>(cmd);
}

IpcMessage encode_scene(const SceneCommand& cmd) {
    ByteWriter w;
    std::visit(overloaded{
                   [&](const CreatePrimitive& c) {
                       check_primitive(static_cast<std::uint32_t>(c.type));
                       w.u32(static_cast<std::uint32_t>(c.type));
                   },
                   [&](const SetActive& c) { w.u32(c.key).u32(c.state); },
                   [&](const SetWorldTransform& c) { w.u32(c.key).f32(c.position).f32(c.rotation).f32(c.scale); },
                   [&](const SetColor& c) {
                       check_rgba(c.rgba);
                       w.u32(c.key).f32(c.rgba);
                   },
                   [&](const SetTexture& c) { w.u32(c.key).bytes(c.image); },
                   [&](const CreateText&) {},
                   [&](const SetText& c) {
                       check_rgba(c.rgba);
                       w.u32(c.key).f32(c.font_size).f32(c.rgba).text(c.text);
                   },
                   [&](const Remove& c) { w.u32(c.key); },
                   [&](const RemoveAll&) {},
                   [&](const BeginDisplayList&) {},
                   [&](const EndDisplayList&) {},
                   [&](const SetTargetMode& c) { w.u32(c.mode); },
               },
               cmd);
    return IpcMessage{static_cast<std::uint32_t>(scene_command_id(cmd)), std::move(w).take()};
}

SceneCommand decode_scene(const IpcMessage& msg) {
    if (!is_scene_command_id(msg.command_id)) {
        throw ProtocolError("unknown scene command id " + std::to_string(msg.command_id));
    }
    ByteReader r(msg.params);
    auto exact = [&](std::size_t n) {
        if (msg.params.size() != n) {
            throw ProtocolError("scene command " + std::to_string(msg.command_id) + " expects " + std::to_string(n) +
                                " parameter bytes, got " + std::to_string(msg.params.size()));
        }
    };
    auto at_least = [&](std::size_t n) {
        if (msg.params.size() < n) {
            throw ProtocolError("scene command " + std::to_string(msg.command_id) + " expects at least " +
                                std::to_string(n) + " parameter bytes");
        }
    };
    switch (static_cast<SceneCommandId>(msg.command_id)) {
        case SceneCommandId::CREATE_PRIMITIVE: {
            exact(4);
            const auto type = r.u32();
            if (type > 5) throw ProtocolError("primitive type " + std::to_string(type) + " out of range");
            return CreatePrimitive{static_cast<PrimitiveType>(type)};
        }
        case SceneCommandId::SET_ACTIVE: {
            exact(8);
            const auto key = r.u32();
            return SetActive{key, r.u32()};
        }
        case SceneCommandId::SET_WORLD_TRANSFORM: {
            exact(44);
            SetWorldTransform c;
            c.key = r.u32();
            c.position = r.f32_array<3>();
            c.rotation = r.f32_array<4>();
            c.scale = r.f32_array<3>();
            return c;
        }
        case SceneCommandId::SET_COLOR: {
            exact(20);
            SetColor c;
            c.key = r.u32();
            c.rgba = r.f32_array<4>();
            return c;
        }
        case SceneCommandId::SET_TEXTURE: {
            at_least(4);
            SetTexture c;
            c.key = r.u32();
            auto img = r.bytes(r.remaining());
            c.image.assign(img.begin(), img.end());
            return c;
        }
        case SceneCommandId::CREATE_TEXT: exact(0); return CreateText{};
        case SceneCommandId::SET_TEXT: {
            at_least(24);
            SetText c;
            c.key = r.u32();
            c.font_size = r.f32();
            c.rgba = r.f32_array<4>();
            auto s = r.bytes(r.remaining());
            c.text.assign(s.begin(), s.end());
            return c;
        }
        case SceneCommandId::REMOVE: exact(4); return Remove{r.u32()};
        case SceneCommandId::REMOVE_ALL: exact(0); return RemoveAll{};
        case SceneCommandId::BEGIN_DISPLAY_LIST: exact(0); return BeginDisplayList{};
        case SceneCommandId::END_DISPLAY_LIST: exact(0); return EndDisplayList{};
        case SceneCommandId::SET_TARGET_MODE: exact(4); return SetTargetMode{r.u32()};
    }
    throw ProtocolError("unknown scene command id " + std::to_string(msg.command_id));
}

}  // namespace hl2ss
