#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mcnoma/io.hpp>
#include <mcnoma/solvers.hpp>

#include "test_helpers.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace mcnoma;
using mcnoma::testing::uniform_instance;

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("mcnoma_io_" + name);
  }
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("instance round trips through JSON") {
  std::mt19937_64 rng(501);
  auto inst = mcnoma::testing::random_instance(rng, 3, 4, 2, Direction::uplink);
  inst.mean_order = MeanOrder(-1.0);

  const json j = instance_to_json(inst);
  const auto back = instance_from_json(j);
  CHECK(back == inst);
}

TEST_CASE("matrices parse from nested rows or a flat row-major list") {
  json j = instance_to_json(uniform_instance(2, 3));
  j["gains"] = {1, 2, 3, 4, 5, 6};  // flat form
  const auto inst = instance_from_json(j);
  CHECK(inst.gains(0, 2) == 3.0);
  CHECK(inst.gains(1, 0) == 4.0);

  j["gains"] = {{1, 2, 3}};  // wrong number of rows
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);
  j["gains"] = {{1, 2}, {3, 4}};  // wrong row length
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);
  j["gains"] = {1, 2, 3, 4, 5};  // flat but short
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);
  j["gains"] = {{1, 2, "x"}, {3, 4, 5}};
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);
}

TEST_CASE("mean order serializes -inf as a string") {
  CHECK(mean_order_to_json(MeanOrder::minus_infinity()) == json("-inf"));
  CHECK(mean_order_to_json(MeanOrder(0.5)) == json(0.5));
  CHECK(mean_order_from_json(json("-inf")) == MeanOrder::minus_infinity());
  CHECK(mean_order_from_json(json(1)) == MeanOrder(1.0));
  CHECK_THROWS_AS(mean_order_from_json(json(true)), std::invalid_argument);

  json j = instance_to_json(uniform_instance(1, 1));
  j["mean_order"] = "-inf";
  CHECK(instance_from_json(j).mean_order.is_minus_infinity());
}

TEST_CASE("missing or malformed instance keys fail with the key name") {
  json j = instance_to_json(uniform_instance(2, 2));
  j.erase("noises");
  try {
    instance_from_json(j);
    FAIL("expected a missing-key error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("noises") != std::string::npos);
  }

  j = instance_to_json(uniform_instance(2, 2));
  j["direction"] = "sideways";
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);

  j = instance_to_json(uniform_instance(2, 2));
  j["num_users"] = 0;
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);

  // Validation still applies after parsing.
  j = instance_to_json(uniform_instance(2, 2));
  j["weights"] = {0.9, 0.9};
  CHECK_THROWS_AS(instance_from_json(j), std::invalid_argument);
}

TEST_CASE("3DM instances round trip and validate on the way in") {
  ThreeDM x;
  x.size = 2;
  x.triplets = {{1, 1, 1}, {2, 2, 2}, {1, 2, 2}};
  const auto back = threedm_from_json(threedm_to_json(x));
  CHECK(back.size == x.size);
  CHECK(back.triplets == x.triplets);

  json j = threedm_to_json(x);
  j["triplets"].push_back({1, 1, 1});  // duplicate
  CHECK_THROWS_AS(threedm_from_json(j), std::invalid_argument);
  j = threedm_to_json(x);
  j["triplets"][0] = {1, 1};
  CHECK_THROWS_AS(threedm_from_json(j), std::invalid_argument);
  j = threedm_to_json(x);
  j.erase("size");
  CHECK_THROWS_AS(threedm_from_json(j), std::invalid_argument);
}

TEST_CASE("reduction artifacts round trip with their labels") {
  ThreeDM x;
  x.size = 2;
  x.triplets = {{1, 1, 1}, {2, 2, 2}, {1, 2, 2}};
  const auto art = build_tM(x, 3);

  const json j = artifact_to_json(art);
  const auto back = artifact_from_json(j);
  CHECK(back.instance == art.instance);
  CHECK(back.source.triplets == art.source.triplets);
  CHECK(back.threshold == art.threshold);
  CHECK(back.m == art.m);
  CHECK(back.trivially_no == art.trivially_no);
  CHECK(back.triplet_user_offset == art.triplet_user_offset);
  REQUIRE(back.subcarrier_labels.size() == art.subcarrier_labels.size());
  REQUIRE(back.user_labels.size() == art.user_labels.size());
  for (size_t i = 0; i < art.subcarrier_labels.size(); ++i) {
    CHECK(back.subcarrier_labels[i].kind == art.subcarrier_labels[i].kind);
    CHECK(back.subcarrier_labels[i].element == art.subcarrier_labels[i].element);
  }
  for (size_t i = 0; i < art.user_labels.size(); ++i) {
    CHECK(back.user_labels[i].kind == art.user_labels[i].kind);
    CHECK(back.user_labels[i].rank == art.user_labels[i].rank);
    CHECK(back.user_labels[i].host_subcarrier == art.user_labels[i].host_subcarrier);
    CHECK(back.user_labels[i].triplet_index == art.user_labels[i].triplet_index);
  }

  json bad = artifact_to_json(art);
  bad["users"].erase(0);  // label count no longer matches the instance
  CHECK_THROWS_AS(artifact_from_json(bad), std::invalid_argument);
  bad = artifact_to_json(art);
  bad["subcarriers"][0]["kind"] = "w";
  CHECK_THROWS_AS(artifact_from_json(bad), std::invalid_argument);
}

TEST_CASE("solve results serialize their allocation and diagnostics") {
  auto inst = uniform_instance(1, 2, 1.0, 1.0, 1.0, 2.0);
  const auto result = solve_single_user(inst);
  const json j = solve_result_to_json(result);
  CHECK(j.at("solver") == "waterfilling");
  CHECK(j.at("status") == "optimal");
  CHECK(j.at("utility").get<double>() == doctest::Approx(result.utility));
  CHECK(j.at("powers").size() == 1);
  CHECK(j.at("powers")[0].size() == 2);
  CHECK(j.at("rates_per_user").size() == 1);
  CHECK(j.at("rates_per_subcarrier").size() == 2);
  CHECK(j.at("diagnostics").is_object());
}

TEST_CASE("equivalence reports expose verdicts per order") {
  ThreeDM x;
  x.size = 2;
  x.triplets = {{1, 1, 1}, {1, 2, 2}};
  const auto report = verify_equivalence(x, 2);
  const json j = report_to_json(report);

  CHECK(j.at("m") == 2);
  CHECK(j.at("direction") == "downlink");
  CHECK(j.at("threshold") == 3.0);
  CHECK(j.at("matching_exists") == false);
  CHECK(j.at("pass") == true);
  CHECK(j.at("recovered_matching").is_null());
  CHECK(j.at("opt_per_order").size() == 4);
  CHECK(j.at("opt_per_order").contains("-inf"));
  CHECK(j.at("orders").size() == 4);
  CHECK(j.at("orders")[0].at("decision") == false);
  CHECK(j.at("rates_per_user").size() == size_t(report.user_rates.size()));

  ThreeDM matched;
  matched.size = 2;
  matched.triplets = {{1, 1, 1}, {2, 2, 2}};
  const json good = report_to_json(verify_equivalence(matched, 1));
  CHECK(good.at("recovered_matching") == json::array({0, 1}));
}

TEST_CASE("files round trip byte-for-byte via sorted two-space dumps") {
  TempFile file("roundtrip.json");
  const json j = instance_to_json(uniform_instance(2, 2));
  save_json(file.path.string(), j);
  const json back = load_json(file.path.string());
  CHECK(back == j);

  // Deterministic bytes: saving the same value twice gives identical files.
  TempFile second("roundtrip2.json");
  save_json(second.path.string(), back);
  std::ifstream a(file.path), b(second.path);
  const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(sa.back() == '\n');

  CHECK_THROWS_AS(load_json("/nonexistent/mcnoma.json"), std::invalid_argument);

  TempFile garbage("garbage.json");
  {
    std::ofstream out(garbage.path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_json(garbage.path.string()), std::invalid_argument);
}
