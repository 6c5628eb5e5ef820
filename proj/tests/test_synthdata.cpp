#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "hidden/synthdata.hpp"
#include "testutil.hpp"

using namespace hidden;

TEST_CASE("grid hierarchy wires sixteen leaves, four quadrants and a root", "[synthdata]") {
  const Hierarchy h = grid_hierarchy();
  REQUIRE(h.label_count == 21);
  REQUIRE(h.edges.size() == 20);
  REQUIRE(h.names.size() == 21);
  REQUIRE(h.names.front() == "l1");
  REQUIRE(h.names.back() == "l21");
  REQUIRE_NOTHROW(h.validate());

  // Quadrant membership of the four corner leaves and two interior ones.
  REQUIRE(GaussianGridSpec::leaf_id(0, 0) == 0);
  REQUIRE(GaussianGridSpec::leaf_id(3, 0) == 3);
  REQUIRE(GaussianGridSpec::leaf_id(0, 3) == 12);
  REQUIRE(GaussianGridSpec::leaf_id(3, 3) == 15);
  REQUIRE(GaussianGridSpec::quadrant_of_leaf(0) == 16);
  REQUIRE(GaussianGridSpec::quadrant_of_leaf(3) == 17);
  REQUIRE(GaussianGridSpec::quadrant_of_leaf(12) == 18);
  REQUIRE(GaussianGridSpec::quadrant_of_leaf(15) == 19);
  REQUIRE(GaussianGridSpec::quadrant_of_leaf(5) == 16);
  REQUIRE(GaussianGridSpec::quadrant_of_leaf(10) == 19);

  // Every leaf hangs off its quadrant, every quadrant off the root.
  std::set<std::pair<int, int>> edges(h.edges.begin(), h.edges.end());
  for (int q = 0; q < 4; ++q) REQUIRE(edges.count({20, 16 + q}) == 1);
  for (int leaf = 0; leaf < 16; ++leaf)
    REQUIRE(edges.count({GaussianGridSpec::quadrant_of_leaf(leaf), leaf}) == 1);
}

TEST_CASE("hop counts on the grid tree match hand values", "[synthdata]") {
  const auto hops = hops_matrix(grid_hierarchy());
  REQUIRE(hops(0, 0) == 0);
  REQUIRE(hops(0, 16) == 1);   // leaf to own quadrant
  REQUIRE(hops(0, 20) == 2);   // leaf to root
  REQUIRE(hops(0, 1) == 2);    // sibling leaves share a quadrant
  REQUIRE(hops(0, 17) == 3);   // leaf to another quadrant
  REQUIRE(hops(0, 2) == 4);    // leaves across quadrants
  REQUIRE(hops(16, 17) == 2);  // quadrants meet at the root
  REQUIRE(hops(16, 20) == 1);
  for (int a = 0; a < 21; ++a) {
    for (int b = 0; b < 21; ++b) REQUIRE(hops(a, b) == hops(b, a));
  }
}

TEST_CASE("hop counts agree with a shortest-path oracle", "[synthdata]") {
  {
    const Hierarchy h = grid_hierarchy();
    const auto hops = hops_matrix(h);
    const auto ref = testutil::ref_hops(h.label_count, h.edges);
    for (int a = 0; a < h.label_count; ++a) {
      for (int b = 0; b < h.label_count; ++b) REQUIRE(hops(a, b) == ref(a, b));
    }
  }
  Rng rng(19);
  for (int rep = 0; rep < 20; ++rep) {
    Hierarchy h;
    h.label_count = 3 + static_cast<int>(rng() % 10);
    h.edges = testutil::random_tree(rng, h.label_count);
    const auto hops = hops_matrix(h);
    const auto ref = testutil::ref_hops(h.label_count, h.edges);
    for (int a = 0; a < h.label_count; ++a) {
      for (int b = 0; b < h.label_count; ++b) REQUIRE(hops(a, b) == ref(a, b));
    }
  }
}

TEST_CASE("hierarchy validation rejects malformed trees", "[synthdata]") {
  Hierarchy h;
  h.label_count = 1;
  REQUIRE_THROWS_AS(h.validate(), std::invalid_argument);

  h.label_count = 3;
  h.edges = {{0, 1}, {1, 2}, {2, 0}};
  REQUIRE_THROWS_WITH(h.validate(), Catch::Matchers::ContainsSubstring("cycle"));

  h.edges = {{0, 0}};
  REQUIRE_THROWS_WITH(h.validate(), Catch::Matchers::ContainsSubstring("self-loop"));

  h.edges = {{0, 7}};
  REQUIRE_THROWS_WITH(h.validate(), Catch::Matchers::ContainsSubstring("out of range"));

  h.edges = {{0, 1}};
  h.names = {"a", "b"};
  REQUIRE_THROWS_WITH(h.validate(), Catch::Matchers::ContainsSubstring("name count"));

  // Connected validation lives in the hop computation.
  Hierarchy island;
  island.label_count = 3;
  island.edges = {{0, 1}};
  REQUIRE_THROWS_WITH(hops_matrix(island), Catch::Matchers::ContainsSubstring("disconnected"));
}

TEST_CASE("generated corpus has the documented shape and label pattern", "[synthdata]") {
  GaussianGridSpec spec;
  const auto data = generate(spec);
  REQUIRE(data.train.size() == 12000);
  REQUIRE(data.test.size() == 8000);
  REQUIRE(data.train.feature_dim == 2);
  REQUIRE(data.train.label_count == 21);
  REQUIRE(data.truth.label_count == 21);

  std::set<std::string> ids;
  std::vector<std::size_t> leaf_counts(16, 0);
  for (const Dataset* split : {&data.train, &data.test}) {
    for (std::size_t i = 0; i < split->size(); ++i) {
      const auto active = split->active_labels(i);
      REQUIRE(active.size() == 3);
      const int leaf = active[0];
      REQUIRE(leaf < 16);
      REQUIRE(active[1] == GaussianGridSpec::quadrant_of_leaf(leaf));
      REQUIRE(active[2] == 20);
      ++leaf_counts[static_cast<std::size_t>(leaf)];
      ids.insert(split->ids[i]);
    }
  }
  REQUIRE(ids.size() == 20000);

  // Binomial(20000, 1/16) three-sigma band per leaf.
  const double expected = 20000.0 / 16.0;
  const double band = 3.0 * std::sqrt(20000.0 * (1.0 / 16.0) * (15.0 / 16.0));
  for (std::size_t l = 0; l < 16; ++l) {
    REQUIRE(std::fabs(static_cast<double>(leaf_counts[l]) - expected) <= band);
  }
}

TEST_CASE("train-split feature statistics standardize both splits", "[synthdata]") {
  GaussianGridSpec spec;
  spec.total_samples = 4000;
  spec.seed = 6;
  const auto data = generate(spec);
  for (std::size_t f = 0; f < 2; ++f) {
    double mean = 0.0;
    for (std::size_t i = 0; i < data.train.size(); ++i) mean += data.train.features(i, f);
    mean /= static_cast<double>(data.train.size());
    double var = 0.0;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
      const double d = data.train.features(i, f) - mean;
      var += d * d;
    }
    var /= static_cast<double>(data.train.size());
    REQUIRE(std::fabs(mean) < 1e-9);
    REQUIRE(std::fabs(var - 1.0) < 1e-9);

    // The test split reuses the train statistics, so it is close to but not
    // exactly standardized.
    double tmean = 0.0;
    for (std::size_t i = 0; i < data.test.size(); ++i) tmean += data.test.features(i, f);
    tmean /= static_cast<double>(data.test.size());
    REQUIRE(std::fabs(tmean) < 0.2);
    REQUIRE(std::fabs(tmean) > 0.0);
  }
}

TEST_CASE("generation is deterministic in the seed", "[synthdata]") {
  GaussianGridSpec spec;
  spec.total_samples = 600;
  spec.seed = 11;
  const auto a = generate(spec);
  const auto b = generate(spec);
  REQUIRE(a.train.features.a == b.train.features.a);
  REQUIRE(a.train.labels.a == b.train.labels.a);
  REQUIRE(a.train.ids == b.train.ids);
  REQUIRE(a.test.features.a == b.test.features.a);
  REQUIRE(a.test.ids == b.test.ids);

  spec.seed = 12;
  const auto c = generate(spec);
  REQUIRE(a.train.features.a != c.train.features.a);
}

TEST_CASE("label dropping removes at most one label and only from eligible documents",
          "[synthdata]") {
  GaussianGridSpec spec;
  spec.total_samples = 3000;
  spec.seed = 4;
  const auto data = generate(spec);

  {
    Rng rng(1);
    const auto same = drop_labels(data.train, 0.0, rng);
    REQUIRE(same.labels.a == data.train.labels.a);
    REQUIRE(same.features.a == data.train.features.a);
  }
  {
    Rng rng(1);
    const auto all = drop_labels(data.train, 1.0, rng);
    for (std::size_t i = 0; i < all.size(); ++i) {
      REQUIRE(all.active_labels(i).size() == 2);
      // Dropped labels were active before; nothing was added.
      const auto before = data.train.active_labels(i);
      const auto after = all.active_labels(i);
      REQUIRE(std::includes(before.begin(), before.end(), after.begin(), after.end()));
    }
    REQUIRE(all.features.a == data.train.features.a);
  }
  {
    Rng rng(7);
    const auto some = drop_labels(data.train, 0.4, rng);
    std::size_t touched = 0;
    for (std::size_t i = 0; i < some.size(); ++i) {
      const auto n = some.active_labels(i).size();
      REQUIRE((n == 2 || n == 3));
      if (n == 2) ++touched;
    }
    const double nd = static_cast<double>(data.train.size());
    const double expect = 0.4 * nd;
    REQUIRE(std::fabs(static_cast<double>(touched) - expect) <= 3.0 * std::sqrt(nd * 0.4 * 0.6));

    Rng rng2(7);
    const auto again = drop_labels(data.train, 0.4, rng2);
    REQUIRE(again.labels.a == some.labels.a);
  }
  {
    // Single-label documents are never emptied.
    Dataset single;
    single.feature_dim = 1;
    single.label_count = 2;
    single.features = Mat(3, 1);
    single.labels = LabelMatrix(3, 2);
    for (std::size_t i = 0; i < 3; ++i) {
      single.labels(i, 0) = 1;
      single.ids.push_back("d" + std::to_string(i));
    }
    Rng rng(5);
    const auto kept = drop_labels(single, 1.0, rng);
    REQUIRE(kept.labels.a == single.labels.a);
  }
  Rng rng(9);
  REQUIRE_THROWS_AS(drop_labels(data.train, -0.1, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(drop_labels(data.train, 1.5, rng), std::invalid_argument);
}

TEST_CASE("subsampling keeps a deterministic subset in original order", "[synthdata]") {
  Rng rng(23);
  const auto data = testutil::random_dataset(rng, 100, 3, 4);

  const auto full = subsample(data, 1.0, 9);
  REQUIRE(full.ids == data.ids);
  REQUIRE(full.features.a == data.features.a);

  const auto half = subsample(data, 0.5, 9);
  REQUIRE(half.size() == 50);
  const auto again = subsample(data, 0.5, 9);
  REQUIRE(half.ids == again.ids);
  const auto other = subsample(data, 0.5, 10);
  REQUIRE(half.ids != other.ids);

  // Kept documents appear in their original relative order.
  std::vector<std::size_t> positions;
  for (const auto& id : half.ids) {
    const auto it = std::find(data.ids.begin(), data.ids.end(), id);
    REQUIRE(it != data.ids.end());
    positions.push_back(static_cast<std::size_t>(it - data.ids.begin()));
  }
  REQUIRE(std::is_sorted(positions.begin(), positions.end()));

  REQUIRE(subsample(data, 0.1, 3).size() == 10);
  REQUIRE_THROWS_AS(subsample(data, 0.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(subsample(data, 1.2, 1), std::invalid_argument);
}

TEST_CASE("grid spec validation pins the documented limits", "[synthdata]") {
  GaussianGridSpec spec;
  spec.grid_side = 3;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.spacing = 0.0;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.sigma_factor = -0.1;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.total_samples = 5;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.train_fraction = 1.0;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
}
