#include <gtest/gtest.h>

#include <algorithm>

#include "srl/rng.hpp"
#include "srl/scene_graph.hpp"
#include "test_support.hpp"

using namespace srl;

TEST(ParseScene, MinimalObject) {
  auto p = parse_scene_json(R"({"objects":[{"id":"cup.1","label":"cup","bbox":[10,20,50,80]}],"relations":[]})");
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p.graph->objects.size(), 1u);
  EXPECT_TRUE(p.graph->relations.empty());
  EXPECT_EQ(p.graph->objects[0].bbox, (BBox{10, 20, 50, 80}));
}

TEST(ParseScene, MissingLabel) {
  auto p = parse_scene_json(R"({"objects":[{"id":"a","bbox":[0,0,5,5]}],"relations":[]})");
  ASSERT_FALSE(p.ok());
  ASSERT_EQ(p.violations.size(), 1u);
  EXPECT_EQ(p.violations[0].code, ViolationCode::MissingField);
  EXPECT_EQ(p.violations[0].index, 0u);
  EXPECT_EQ(p.violations[0].subject, "label");
}

TEST(ParseScene, ZeroWidthBox) {
  auto p = parse_scene_json(R"({"objects":[{"id":"a","label":"dog","bbox":[5,5,5,9]}],"relations":[]})");
  ASSERT_FALSE(p.ok());
  ASSERT_EQ(p.violations.size(), 1u);
  EXPECT_EQ(p.violations[0].code, ViolationCode::BadBBox);
  EXPECT_NE(p.violations[0].detail.find("width"), std::string::npos);
}

TEST(ParseScene, ReportsEveryViolation) {
  auto p = parse_scene_json(
      R"({"objects":[{"id":"a","bbox":[0,0,5,5]},{"id":"a","label":"x","bbox":[3,3,1,1]}],)"
      R"("relations":[["a","on","zz"],["a","on","a"],[1,2]]})");
  ASSERT_FALSE(p.ok());
  for (auto code : {ViolationCode::MissingField, ViolationCode::BadBBox, ViolationCode::DuplicateId,
                    ViolationCode::DanglingRelationEndpoint, ViolationCode::SelfRelation,
                    ViolationCode::BadRelation}) {
    EXPECT_TRUE(contains_code(p.violations, code)) << to_string(code);
  }
}

TEST(ParseScene, NotParseable) {
  for (const char* raw : {"", "{", "[1,2]", "not json"}) {
    auto p = parse_scene_json(raw);
    ASSERT_FALSE(p.ok()) << raw;
    EXPECT_EQ(p.violations[0].code, ViolationCode::NotParseable) << raw;
  }
}

TEST(ParseScene, UnknownFieldsWarnOnly) {
  auto p = parse_scene_json(
      R"({"objects":[{"id":"a","label":"dog","bbox":[0,0,5,5],"score":0.9}],"relations":[],"caption":"x"})");
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p.warnings.size(), 2u);
}

TEST(ValidateGraph, DanglingEndpoint) {
  SceneGraph g;
  g.objects = {{"a", "cup", {0, 0, 1, 1}}};
  g.relations = {{"a", "on", "b"}};
  auto v = validate_graph(g);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, ViolationCode::DanglingRelationEndpoint);
  EXPECT_EQ(v[0].index, 0u);
}

TEST(ValidateGraph, ValidPair) {
  SceneGraph g;
  g.objects = {{"a", "cup", {0, 0, 1, 1}}, {"b", "plate", {2, 0, 3, 1}}};
  g.relations = {{"a", "left of", "b"}};
  EXPECT_TRUE(validate_graph(g).empty());
}

TEST(ValidateGraph, StrictVocabulary) {
  const auto vocab = PredicateVocabulary::load(test::fixture("vocabulary.txt"));
  SceneGraph g;
  g.objects = {{"a", "cup", {0, 0, 1, 1}}, {"b", "plate", {2, 0, 3, 1}}};
  g.relations = {{"a", "teleports-over", "b"}, {"a", "left of", "b"}};
  auto v = validate_graph(g, {&vocab, true});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, ViolationCode::UnknownPredicate);
  EXPECT_EQ(v[0].index, 0u);
  EXPECT_TRUE(validate_graph(g, {&vocab, false}).empty());
}

TEST(ValidateGraph, ImageBounds) {
  SceneGraph g;
  g.image_size = ImageSize{100, 50};
  g.objects = {{"a", "cup", {0, 0, 100, 50}}, {"b", "cup", {10, 10, 101, 20}}};
  auto v = validate_graph(g);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, ViolationCode::BoxOutOfBounds);
  EXPECT_EQ(v[0].index, 1u);
}

TEST(ValidateGraph, OrderIndependentMultiset) {
  SceneGraph g;
  g.objects = {{"a", "cup", {0, 0, 1, 1}}, {"a", "cup", {0, 0, 2, 2}}, {"c", "", {0, 0, 1, 1}}};
  g.relations = {{"a", "on", "x"}, {"c", "on", "c"}};
  auto codes = [](const std::vector<Violation>& v) {
    std::vector<ViolationCode> c;
    for (const auto& x : v) c.push_back(x.code);
    std::sort(c.begin(), c.end());
    return c;
  };
  const auto base = codes(validate_graph(g));
  auto h = g;
  std::reverse(h.objects.begin(), h.objects.end());
  std::reverse(h.relations.begin(), h.relations.end());
  EXPECT_EQ(codes(validate_graph(h)), base);
}

TEST(PredicateVocabulary, DisjointSections) {
  EXPECT_THROW(PredicateVocabulary::parse("[base]\non\n[extended]\non\n"), std::invalid_argument);
  auto v = PredicateVocabulary::parse("[base]\non\n[extended]\nleft of\n");
  EXPECT_TRUE(v.contains("on"));
  EXPECT_TRUE(v.contains("left of"));
  EXPECT_FALSE(v.contains("under"));
}

TEST(SerializeScene, EmptyGraph) {
  EXPECT_EQ(serialize_scene(SceneGraph{}), R"({"objects":[],"relations":[]})");
}

TEST(SerializeScene, InsertionOrderDoesNotMatter) {
  SceneGraph a;
  a.objects = {{"b", "plate", {2, 0, 3, 1.5}}, {"a", "cup", {0, 0, 1, 1}}};
  a.relations = {{"b", "right of", "a"}, {"a", "left of", "b"}};
  SceneGraph b = a;
  std::reverse(b.objects.begin(), b.objects.end());
  std::reverse(b.relations.begin(), b.relations.end());
  EXPECT_EQ(serialize_scene(a), serialize_scene(b));
  EXPECT_EQ(serialize_scene(a),
            R"({"objects":[{"id":"a","label":"cup","bbox":[0,0,1,1]},{"id":"b","label":"plate","bbox":[2,0,3,1.5]}],)"
            R"("relations":[["a","left of","b"],["b","right of","a"]]})");
}

TEST(SerializeScene, RejectsInvalid) {
  SceneGraph g;
  g.objects = {{"a", "cup", {0, 0, 0, 1}}};
  EXPECT_THROW(serialize_scene(g), InvalidGraph);
}

TEST(SerializeScene, FuzzedRoundTrip) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto g = test::random_graph(rng);
    auto p = parse_scene_json(serialize_scene(g));
    ASSERT_TRUE(p.ok());
    EXPECT_EQ(*p.graph, canonicalize(g));
  }
}
