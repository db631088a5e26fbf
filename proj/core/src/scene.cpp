#include "hl2ss/scene.hpp"

namespace hl2ss {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool looks_like_image(const Bytes& b) {
    const bool png = b.size() >= 8 && b[0] == 0x89 && b[1] == 'P' && b[2] == 'N' && b[3] == 'G';
    const bool jpg = b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
    return png || jpg;
}

std::uint32_t status(bool ok) { return ok ? SceneState::kSuccess : SceneState::kFailure; }

}  // namespace

const SceneObject* SceneState::find(std::uint32_t key) const {
    auto it = objects_.find(key);
    return it == objects_.end() ? nullptr : &it->second;
}

std::uint32_t SceneState::create(SceneObject obj) {
    const std::uint32_t key = next_key_++;
    objects_.emplace(key, std::move(obj));
    last_key_ = key;
    return key;
}

SceneObject* SceneState::target(std::uint32_t key) {
    auto it = objects_.find(target_mode_ == 1 ? last_key_ : key);
    return it == objects_.end() ? nullptr : &it->second;
}

std::uint32_t SceneState::apply(const SceneCommand& cmd) {
    return std::visit(
        overloaded{
            [&](const CreatePrimitive& c) {
                SceneObject o;
                o.kind = SceneObject::Kind::PRIMITIVE;
                o.primitive = c.type;
                return create(std::move(o));
            },
            [&](const CreateText&) {
                SceneObject o;
                o.kind = SceneObject::Kind::TEXT;
                return create(std::move(o));
            },
            [&](const SetActive& c) {
                auto* o = target(c.key);
                if (o) o->active = c.state != 0;
                return status(o != nullptr);
            },
            [&](const SetWorldTransform& c) {
                auto* o = target(c.key);
                if (o) {
                    o->position = c.position;
                    o->rotation = c.rotation;
                    o->scale = c.scale;
                }
                return status(o != nullptr);
            },
            [&](const SetColor& c) {
                auto* o = target(c.key);
                if (!o || o->kind != SceneObject::Kind::PRIMITIVE) return kFailure;
                for (float x : c.rgba) {
                    if (!(x >= 0.0f && x <= 1.0f)) return kFailure;
                }
                o->color = c.rgba;
                return kSuccess;
            },
            [&](const SetTexture& c) {
                auto* o = target(c.key);
                if (!o || o->kind != SceneObject::Kind::PRIMITIVE || !looks_like_image(c.image)) return kFailure;
                o->texture = c.image;
                return kSuccess;
            },
            [&](const SetText& c) {
                auto* o = target(c.key);
                if (!o || o->kind != SceneObject::Kind::TEXT) return kFailure;
                o->text = c.text;
                o->font_size = c.font_size;
                o->color = c.rgba;
                return kSuccess;
            },
            [&](const Remove& c) { return status(objects_.erase(c.key) == 1); },
            [&](const RemoveAll&) {
                objects_.clear();
                return kSuccess;
            },
            [&](const BeginDisplayList&) {
                display_list_ = true;
                return kSuccess;
            },
            [&](const EndDisplayList&) {
                display_list_ = false;
                return kSuccess;
            },
            [&](const SetTargetMode& c) {
                if (c.mode > 1) return kFailure;
                target_mode_ = c.mode;
                return kSuccess;
            },
        },
        cmd);
}

}  // namespace hl2ss
