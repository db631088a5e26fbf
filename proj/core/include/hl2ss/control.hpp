#pragma once

// Encodings for the remote configuration port (3809) and the Unity IPC
// port (3816).
//
// Configuration commands are a tag byte followed by little-endian
// parameters. White balance and exposure values are given in natural units
// and divided by 25 and 10 on the wire; the server multiplies them back.
//
// IPC messages are `u32 command | u32 size | params`. The remote-scene
// command set maps onto IPC messages; every scene command is answered with
// one u32 (a key for creators, 1 / 0 for success / failure otherwise).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "hl2ss/bytes.hpp"
#include "hl2ss/streams.hpp"

namespace hl2ss {

// ---------------------------------------------------------------------------
// Remote configuration port

struct SetMarkerState {
    bool enable = false;
    bool operator==(const SetMarkerState&) const = default;
};

struct SetFocus {
    std::uint32_t mode = 0;
    std::uint32_t range = 0;
    std::uint32_t distance = 0;
    std::uint32_t value = 0;
    std::uint32_t driver_fallback = 0;
    bool operator==(const SetFocus&) const = default;
};

struct SetVideoTemporalDenoising {
    std::uint32_t mode = 0;
    bool operator==(const SetVideoTemporalDenoising&) const = default;
};

struct SetWhiteBalancePreset {
    std::uint32_t preset = 0;
    bool operator==(const SetWhiteBalancePreset&) const = default;
};

/// Natural value (e.g. 2700); must be a multiple of 25.
struct SetWhiteBalanceValue {
    std::uint32_t value = 0;
    bool operator==(const SetWhiteBalanceValue&) const = default;
};

/// Natural value; must be a multiple of 10.
struct SetExposure {
    std::uint32_t mode = 0;
    std::uint32_t value = 0;
    bool operator==(const SetExposure&) const = default;
};

struct GetVersion {
    bool operator==(const GetVersion&) const = default;
};

using ControlCommand = std::variant<SetMarkerState, SetFocus, SetVideoTemporalDenoising, SetWhiteBalancePreset,
                                    SetWhiteBalanceValue, SetExposure, GetVersion>;

enum class ControlTag : std::uint8_t {
    MARKER_STATE = 0,
    FOCUS = 1,
    TEMPORAL_DENOISING = 2,
    WHITE_BALANCE_PRESET = 3,
    WHITE_BALANCE_VALUE = 4,
    EXPOSURE = 5,
    GET_VERSION = 6,
};

inline constexpr std::uint32_t kWhiteBalanceStep = 25;
inline constexpr std::uint32_t kExposureStep = 10;
inline constexpr std::size_t kVersionReplySize = 8;

using ServerVersion = std::array<std::uint16_t, 4>;

ControlTag control_tag(const ControlCommand& cmd) noexcept;

/// Throws ValidationError for values that are not exact multiples of the
/// wire step.
Bytes encode_control(const ControlCommand& cmd);

/// Number of parameter bytes following a tag, or nullopt for unknown tags.
std::optional<std::size_t> control_param_size(std::uint8_t tag) noexcept;

/// Server-side inverse: tag byte followed by exactly its parameters.
/// Natural units are restored. Throws ProtocolError.
ControlCommand decode_control(ByteView bytes);

/// Only GetVersion produces a reply.
bool control_expects_reply(const ControlCommand& cmd) noexcept;

Bytes encode_version(const ServerVersion& v);
/// Throws ProtocolError unless exactly 8 bytes.
ServerVersion decode_version(ByteView reply);
std::string format_version(const ServerVersion& v);

// ---------------------------------------------------------------------------
// Unity IPC

inline constexpr std::uint32_t kIpcReservedCommand = 0xFFFFFFFFu;
inline constexpr std::size_t kIpcHeaderSize = 8;

struct IpcMessage {
    std::uint32_t command_id = 0;
    Bytes params;
    bool operator==(const IpcMessage&) const = default;
};

/// Throws ValidationError for the reserved id.
Bytes encode_ipc(const IpcMessage& msg);

// ---------------------------------------------------------------------------
// Remote scene commands

enum class PrimitiveType : std::uint32_t { SPHERE = 0, CAPSULE = 1, CYLINDER = 2, CUBE = 3, PLANE = 4, QUAD = 5 };

std::optional<PrimitiveType> primitive_from_name(std::string_view name) noexcept;
std::string_view primitive_name(PrimitiveType type) noexcept;

enum class SceneCommandId : std::uint32_t {
    CREATE_PRIMITIVE = 0,
    SET_ACTIVE = 1,
    SET_WORLD_TRANSFORM = 2,
    SET_COLOR = 4,
    SET_TEXTURE = 5,
    CREATE_TEXT = 6,
    SET_TEXT = 7,
    REMOVE = 16,
    REMOVE_ALL = 17,
    BEGIN_DISPLAY_LIST = 18,
    END_DISPLAY_LIST = 19,
    SET_TARGET_MODE = 20,
};

bool is_scene_command_id(std::uint32_t id) noexcept;

using Quatf = std::array<float, 4>;
using Rgbaf = std::array<float, 4>;

struct CreatePrimitive {
    PrimitiveType type = PrimitiveType::CUBE;
    bool operator==(const CreatePrimitive&) const = default;
};
struct SetActive {
    std::uint32_t key = 0;
    std::uint32_t state = 0;
    bool operator==(const SetActive&) const = default;
};
struct SetWorldTransform {
    std::uint32_t key = 0;
    Vec3f position{};
    Quatf rotation{0, 0, 0, 1};
    Vec3f scale{1, 1, 1};
    bool operator==(const SetWorldTransform&) const = default;
};
struct SetColor {
    std::uint32_t key = 0;
    Rgbaf rgba{};
    bool operator==(const SetColor&) const = default;
};
struct SetTexture {
    std::uint32_t key = 0;
    Bytes image;  // JPG or PNG file contents
    bool operator==(const SetTexture&) const = default;
};
struct CreateText {
    bool operator==(const CreateText&) const = default;
};
struct SetText {
    std::uint32_t key = 0;
    float font_size = 0.0f;
    Rgbaf rgba{};
    std::string text;  // UTF-8, no terminator
    bool operator==(const SetText&) const = default;
};
struct Remove {
    std::uint32_t key = 0;
    bool operator==(const Remove&) const = default;
};
struct RemoveAll {
    bool operator==(const RemoveAll&) const = default;
};
struct BeginDisplayList {
    bool operator==(const BeginDisplayList&) const = default;
};
struct EndDisplayList {
    bool operator==(const EndDisplayList&) const = default;
};
struct SetTargetMode {
    std::uint32_t mode = 0;
    bool operator==(const SetTargetMode&) const = default;
};

using SceneCommand = std::variant<CreatePrimitive, SetActive, SetWorldTransform, SetColor, SetTexture, CreateText,
                                  SetText, Remove, RemoveAll, BeginDisplayList, EndDisplayList, SetTargetMode>;

SceneCommandId scene_command_id(const SceneCommand& cmd) noexcept;

/// Creators reply with a key; everything else with 1 / 0.
bool scene_command_creates(const SceneCommand& cmd) noexcept;

/// Throws ValidationError (primitive type > 5, rgba outside [0, 1]).
IpcMessage encode_scene(const SceneCommand& cmd);

/// Throws ProtocolError for unknown ids (including 3) or malformed params.
SceneCommand decode_scene(const IpcMessage& msg);

}  // namespace hl2ss
