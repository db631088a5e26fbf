#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hl2ss/control.hpp"

namespace hl2ss {

struct SceneObject {
    enum class Kind { PRIMITIVE, TEXT };

    Kind kind = Kind::PRIMITIVE;
    PrimitiveType primitive = PrimitiveType::CUBE;
    bool active = true;
    Vec3f position{};
    Quatf rotation{0, 0, 0, 1};
    Vec3f scale{1, 1, 1};
    Rgbaf color{1, 1, 1, 1};
    Bytes texture;
    std::string text;
    float font_size = 0.0f;

    bool operator==(const SceneObject&) const = default;
};

/// Data-only model of the remote Unity scene.
///
/// Keys start at 1 and are never reused within one state's lifetime. In
/// target mode 1 the key of property commands is ignored and the most
/// recently created object is modified instead.
class SceneState {
public:
    static constexpr std::uint32_t kFailure = 0;
    static constexpr std::uint32_t kSuccess = 1;

    /// Applies one command and returns the 4-byte reply value.
    std::uint32_t apply(const SceneCommand& cmd);

    const std::map<std::uint32_t, SceneObject>& objects() const noexcept { return objects_; }
    const SceneObject* find(std::uint32_t key) const;

    std::uint32_t target_mode() const noexcept { return target_mode_; }
    std::uint32_t last_key() const noexcept { return last_key_; }
    bool in_display_list() const noexcept { return display_list_; }

private:
    std::uint32_t create(SceneObject obj);
    SceneObject* target(std::uint32_t key);

    std::map<std::uint32_t, SceneObject> objects_;
    std::uint32_t next_key_ = 1;
    std::uint32_t last_key_ = 0;
    std::uint32_t target_mode_ = 0;
    bool display_list_ = false;
};

}  // namespace hl2ss
