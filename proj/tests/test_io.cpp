#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rdt/errors.hpp"
#include "rdt/io.hpp"

using namespace rdt;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigDir = RDT_CONFIG_DIR;

fs::path temp_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() /
             ("rdt_io_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("device spec fixture matches the built-in calibration") {
  const auto spec = io::load_device_spec(kConfigDir / "device_worst_case.json");
  const auto builtin = devsim::DeviceSpec::worst_case();
  CHECK(spec.seed == builtin.seed);
  CHECK(spec.geometry.rows_per_bank == builtin.geometry.rows_per_bank);
  CHECK(spec.geometry.tested_row_fraction ==
        doctest::Approx(builtin.geometry.tested_row_fraction));
  CHECK(spec.distribution.jitter_half_width ==
        builtin.distribution.jitter_half_width);
  CHECK(spec.distribution.weak_rows_per_bank ==
        builtin.distribution.weak_rows_per_bank);
  CHECK(spec.preset.rdt_scale == builtin.preset.rdt_scale);
}

TEST_CASE("device spec JSON round trip") {
  const auto spec = devsim::DeviceSpec::worst_case();
  const json j = spec;
  devsim::DeviceSpec back;
  j.get_to(back);
  CHECK(json(back) == j);
}

TEST_CASE("model params round trip and defaults") {
  errmodel::ModelParams params;
  params.delta_l = 9;
  params.removal_enabled = true;
  const json j = params;
  errmodel::ModelParams back;
  j.get_to(back);
  CHECK(json(back) == j);

  // Only delta_l and n are mandatory; everything else has defaults.
  const json minimal = {{"delta_l", 3}, {"n", 2}};
  errmodel::ModelParams sparse;
  minimal.get_to(sparse);
  CHECK(sparse.delta_l == 3);
  CHECK(sparse.n == 2);
  CHECK(sparse.scrub_interval == 1000);
  CHECK(sparse.flip_space_bits == 268435456ull);
  CHECK_FALSE(sparse.removal_enabled);
}

TEST_CASE("fixture model params carry the M8 preset values") {
  const auto params = io::load_model_params(kConfigDir / "model_m8.json");
  CHECK(params.delta_l == 12);
  CHECK(params.n == 5);
  CHECK(params.scrub_interval == 1000);
  CHECK(params.codeword_total_bits == 136);
  CHECK(params.codewords() == 2097152);
}

TEST_CASE("epoch clock JSON round trip") {
  montecarlo::EpochClock clock;
  clock.rows_hammered_per_epoch = 131072;
  clock.hammer_count = 20000;
  const json j = clock;
  montecarlo::EpochClock back;
  j.get_to(back);
  CHECK(json(back) == j);

  montecarlo::EpochClock defaults;
  json::object().get_to(defaults);
  CHECK(defaults.rows_hammered_per_epoch == 262144);
}

TEST_CASE("sweep config loader") {
  const auto configs = io::load_sweep_configs(kConfigDir / "sweep_delta_l.json");
  REQUIRE(configs.size() == 3);
  CHECK(configs[0].label == "delta-l-10");
  CHECK(configs[0].params.delta_l == 10);
  CHECK(configs[0].params.n == 10);
  CHECK(configs[0].params.removal_enabled);
  CHECK(configs[0].trials == 20000);
  CHECK(configs[0].horizon == 150000);

  const fs::path empty = temp_dir() / "empty_sweep.json";
  io::write_json(empty, json{{"configs", json::array()}});
  CHECK_THROWS_AS(io::load_sweep_configs(empty), ConfigError);
}

TEST_CASE("profile summary JSON round trip") {
  profiler::ProfileSummary summary;
  summary.rows = {{0, 3}, {0, 9}};
  summary.rdt_min_per_iteration = {7000, 7200};
  summary.guardband_ratio = 7000.0 / 7200.0;
  summary.weak_rows = {{0, 3}};
  summary.max_flips_in_one_iteration = 2;
  summary.unique_flip_locations = 3;
  summary.unique_flip_rows = 1;
  summary.rdt_p10 = 7100;
  summary.single_measurement = {7000, 0};

  const fs::path path = temp_dir() / "summary.json";
  io::write_json(path, json(summary));
  const auto back = io::load_profile_summary(path);
  CHECK(back.rows == summary.rows);
  CHECK(back.single_measurement == summary.single_measurement);
  CHECK(back.rdt_p10 == summary.rdt_p10);
  CHECK(back.guardband_ratio == doctest::Approx(summary.guardband_ratio));
}

TEST_CASE("threshold map CSV round trip") {
  svard::ThresholdMap map;
  map.entries.push_back({{0, 2}, 7900, svard::Bin::guarded, 0});
  map.entries.push_back({{0, 7}, 16000, svard::Bin::relaxed, 2});
  map.entries.push_back({{1, 0}, 9000, svard::Bin::relaxed, 0});

  const fs::path path = temp_dir() / "thresholds.csv";
  io::write_threshold_map_csv(path, map);
  const auto back = io::load_threshold_map_csv(path);
  REQUIRE(back.entries.size() == 3);
  CHECK(back.entries[0].row == devsim::RowAddr{0, 2});
  CHECK(back.entries[0].threshold == 7900);
  CHECK(back.entries[0].bin == svard::Bin::guarded);
  CHECK(back.entries[1].demotions == 2);
  CHECK(back.entries[2].row.bank == 1);

  const fs::path bad = temp_dir() / "bad.csv";
  io::write_text(bad, "not,a,threshold,map\n");
  CHECK_THROWS_AS(io::load_threshold_map_csv(bad), ConfigError);
}

TEST_CASE("config hash is stable and content sensitive") {
  const json a = {{"command", "mttue"}, {"seed", 1}};
  const json b = {{"seed", 1}, {"command", "mttue"}};  // key order is canonical
  CHECK(io::config_hash(a) == io::config_hash(b));
  CHECK(io::config_hash(a).size() == 16);

  json c = a;
  c["seed"] = 2;
  CHECK(io::config_hash(a) != io::config_hash(c));
}

TEST_CASE("failure curve CSV schemas") {
  montecarlo::FailureCurve curve;
  curve.epochs = {1, 10};
  curve.p_fail_by = {0.25, 0.5};

  const fs::path bare = temp_dir() / "curve.csv";
  io::write_failure_curve_csv(bare, curve);
  std::ifstream in(bare);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,p_fail");
  std::getline(in, line);
  CHECK(line == "1,0.25");

  const fs::path labelled = temp_dir() / "curve_labelled.csv";
  io::write_failure_curve_csv(labelled, curve, "arm");
  std::ifstream in2(labelled);
  std::getline(in2, line);
  CHECK(line == "epoch,p_fail,label");
  std::getline(in2, line);
  CHECK(line == "1,0.25,arm");
}

TEST_CASE("malformed JSON raises a config error") {
  const fs::path path = temp_dir() / "broken.json";
  io::write_text(path, "{ not json");
  CHECK_THROWS_AS(io::load_json(path), ConfigError);
  CHECK_THROWS_AS(io::load_json(temp_dir() / "missing.json"), ConfigError);
}

TEST_CASE("matrix CSV and flip log writers") {
  profiler::RdtMatrix matrix;
  matrix.rows = {{0, 1}, {0, 2}};
  matrix.iterations = 2;
  matrix.fine_grid = {100, 400, 10};
  matrix.values = {100, 110, profiler::kAboveGrid, 120};
  matrix.flip_log = {{{0, 1, 5}}, {{0, 1, 5}, {0, 1, 9}}, {}, {{0, 2, 7}}};

  const fs::path csv = temp_dir() / "matrix.csv";
  io::write_matrix_csv(csv, matrix);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "bank,row,iteration,measured_rdt");
  std::getline(in, line);
  CHECK(line == "0,1,0,100");
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "0,2,0,NA");

  const fs::path log = temp_dir() / "flips.json";
  io::write_flip_log_json(log, matrix);
  const json parsed = io::load_json(log);
  CHECK(parsed.at("fine_grid").at("step") == 10);
  REQUIRE(parsed.at("entries").size() == 3);  // empty sets are skipped
  CHECK(parsed.at("entries")[1].at("bits").size() == 2);
}
