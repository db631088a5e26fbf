#include <gtest/gtest.h>

#include "hl2ss/scene.hpp"

using namespace hl2ss;

TEST(Scene, CreateColorTransformRemoveAll) {
    SceneState s;
    const auto cube = s.apply(CreatePrimitive{PrimitiveType::CUBE});
    EXPECT_EQ(cube, 1u);
    EXPECT_EQ(s.apply(SetColor{cube, {1, 0, 0, 1}}), SceneState::kSuccess);
    SetWorldTransform t{cube, {0, 0, 1}, {0, 0, 0, 1}, {0.2f, 0.2f, 0.2f}};
    EXPECT_EQ(s.apply(t), SceneState::kSuccess);

    ASSERT_EQ(s.objects().size(), 1u);
    const SceneObject* o = s.find(cube);
    ASSERT_NE(o, nullptr);
    EXPECT_EQ(o->primitive, PrimitiveType::CUBE);
    EXPECT_EQ(o->color, (Rgbaf{1, 0, 0, 1}));
    EXPECT_EQ(o->position, (Vec3f{0, 0, 1}));
    EXPECT_EQ(o->scale, (Vec3f{0.2f, 0.2f, 0.2f}));

    EXPECT_EQ(s.apply(RemoveAll{}), SceneState::kSuccess);
    EXPECT_TRUE(s.objects().empty());
    // keys keep counting after a clear
    EXPECT_EQ(s.apply(CreatePrimitive{PrimitiveType::SPHERE}), 2u);
}

TEST(Scene, UnknownKeysFail) {
    SceneState s;
    EXPECT_EQ(s.apply(SetActive{42, 1}), SceneState::kFailure);
    EXPECT_EQ(s.apply(Remove{1}), SceneState::kFailure);
    const auto k = s.apply(CreatePrimitive{});
    EXPECT_EQ(s.apply(Remove{k}), SceneState::kSuccess);
    EXPECT_EQ(s.apply(Remove{k}), SceneState::kFailure);
}

TEST(Scene, TargetModeRedirectsToLastCreated) {
    SceneState s;
    const auto cube = s.apply(CreatePrimitive{PrimitiveType::CUBE});
    EXPECT_EQ(s.apply(SetTargetMode{1}), SceneState::kSuccess);
    const auto text = s.apply(CreateText{});
    EXPECT_EQ(s.apply(SetText{999, 0.3f, {0, 1, 0, 1}, "hi"}), SceneState::kSuccess);
    EXPECT_EQ(s.find(text)->text, "hi");
    EXPECT_FLOAT_EQ(s.find(text)->font_size, 0.3f);
    EXPECT_EQ(s.apply(SetActive{cube, 0}), SceneState::kSuccess);
    EXPECT_TRUE(s.find(cube)->active);  // redirected to the text object
    EXPECT_FALSE(s.find(text)->active);

    EXPECT_EQ(s.apply(SetTargetMode{0}), SceneState::kSuccess);
    EXPECT_EQ(s.apply(SetActive{cube, 0}), SceneState::kSuccess);
    EXPECT_FALSE(s.find(cube)->active);
    EXPECT_EQ(s.apply(SetTargetMode{2}), SceneState::kFailure);
}

TEST(Scene, KindSpecificCommands) {
    SceneState s;
    const auto cube = s.apply(CreatePrimitive{});
    const auto text = s.apply(CreateText{});
    EXPECT_EQ(s.apply(SetText{cube, 1, {1, 1, 1, 1}, "x"}), SceneState::kFailure);
    EXPECT_EQ(s.apply(SetColor{text, {1, 1, 1, 1}}), SceneState::kFailure);
    EXPECT_EQ(s.apply(SetTexture{cube, {1, 2, 3}}), SceneState::kFailure);
    const Bytes jpg{0xFF, 0xD8, 0xFF, 0xE0};
    EXPECT_EQ(s.apply(SetTexture{cube, jpg}), SceneState::kSuccess);
    EXPECT_EQ(s.find(cube)->texture, jpg);
}

TEST(Scene, DisplayListFlag) {
    SceneState s;
    s.apply(BeginDisplayList{});
    EXPECT_TRUE(s.in_display_list());
    s.apply(EndDisplayList{});
    EXPECT_FALSE(s.in_display_list());
}
