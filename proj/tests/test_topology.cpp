#include <gtest/gtest.h>

#include <set>

#include "cnotmin/topology.hpp"

using namespace cnotmin;

TEST(Topology, AllToAllActionCount) {
  for (int n = 2; n <= 8; ++n) EXPECT_EQ(all_to_all(n).num_actions(), static_cast<std::size_t>(n * (n - 1)));
  EXPECT_EQ(all_to_all(4).num_actions(), 12u);
}

TEST(Topology, BuiltinsAreTrees) {
  for (const auto& name : builtin_names()) {
    Topology t = builtin(name);
    EXPECT_EQ(t.edges().size(), static_cast<std::size_t>(t.size() - 1)) << name;
    EXPECT_EQ(t.num_actions(), 2 * t.edges().size()) << name;
    EXPECT_EQ(t.name(), name);
  }
  EXPECT_EQ(builtin("4-L").num_actions(), 6u);
  EXPECT_EQ(builtin("6-L"), linear_topology(6));
  EXPECT_EQ(builtin("5-T"), t_topology(5));
}

TEST(Topology, DegreeSignatures) {
  auto degrees = [](const Topology& t) {
    std::multiset<int> d;
    std::vector<int> deg(t.size());
    for (const auto& e : t.edges()) ++deg[e.a], ++deg[e.b];
    d.insert(deg.begin(), deg.end());
    return d;
  };
  EXPECT_EQ(degrees(builtin("4-Y")), (std::multiset<int>{1, 1, 1, 3}));
  EXPECT_EQ(degrees(builtin("6-Y")), (std::multiset<int>{1, 1, 1, 2, 2, 3}));
  EXPECT_EQ(degrees(builtin("5-L")), (std::multiset<int>{1, 1, 2, 2, 2}));
}

TEST(Topology, ActionIdsAreLexicographic) {
  Topology t = builtin("4-L");
  std::vector<CnotGate> expected{{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}};
  EXPECT_EQ(t.actions(), expected);
  EXPECT_EQ(t.action_id({2, 1}), std::optional<std::size_t>(3));
  EXPECT_FALSE(t.action_id({0, 2}).has_value());
  EXPECT_TRUE(t.allows({3, 2}));
  EXPECT_FALSE(t.allows({0, 3}));
}

TEST(Topology, Distances) {
  auto d = builtin("5-L").distances();
  EXPECT_EQ(d[0][4], 4);
  EXPECT_EQ(d[3][1], 2);
}

TEST(Topology, Validation) {
  EXPECT_THROW(Topology(3, {{0, 1}}), TopologyError);
  EXPECT_THROW(Topology(3, {{0, 1}, {1, 1}}), TopologyError);
  EXPECT_THROW(Topology(3, {{0, 1}, {1, 0}, {1, 2}}), TopologyError);
  EXPECT_THROW(Topology(3, {{0, 3}, {1, 2}}), TopologyError);
  EXPECT_THROW(builtin("9-Q"), TopologyError);
}

TEST(Topology, TextRoundTrip) {
  Topology ring = parse_topology("topology 4\nname ring\nedge 0 1\nedge 1 2\nedge 2 3\nedge 3 0\n");
  EXPECT_EQ(ring.name(), "ring");
  EXPECT_EQ(ring.edges().size(), 4u);
  EXPECT_EQ(parse_topology(serialize_topology(ring)), ring);
  EXPECT_THROW(parse_topology("topology 3\nedge 0\n"), ParseError);
  Topology sample = load_topology(std::string(CNOTMIN_SAMPLES_DIR) + "/ring5.topology");
  EXPECT_EQ(sample.size(), 5);
  EXPECT_EQ(sample.name(), "ring-5");
}

TEST(Topology, ResolveNames) {
  EXPECT_EQ(resolve_topology("all-5"), all_to_all(5));
  EXPECT_EQ(resolve_topology("8-H").size(), 8);
}

TEST(Instances, DeterministicAndInvertible) {
  Topology t = builtin("5-T");
  for (std::size_t i = 0; i < 20; ++i) {
    auto a = sample_instance(t, instance_seed(RngSeed{1}, i), InstanceWalk::Topology);
    EXPECT_EQ(a, sample_instance(t, instance_seed(RngSeed{1}, i), InstanceWalk::Topology));
    EXPECT_TRUE(is_invertible(a));
    EXPECT_EQ(sample_instance(t, instance_seed(RngSeed{1}, i)), random_instance(5, instance_seed(RngSeed{1}, i)));
  }
  EXPECT_EQ(parse_instance_walk(to_string(InstanceWalk::Topology)), InstanceWalk::Topology);
  EXPECT_THROW(parse_instance_walk("ring"), std::invalid_argument);
}
