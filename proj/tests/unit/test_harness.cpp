#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "neuromime/harness.hpp"
#include "neuromime/io.hpp"

using namespace neuromime;
namespace h = neuromime::harness;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("neuromime_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kTrng = R"(
experiment = "trng-study"
seed = 11
[output]
emit = ["json", "bits", "csv"]
[params]
n_bits = 2000
keystream_check = false
)";

}  // namespace

TEST_CASE("registry covers every experiment") {
  for (const char* id : {"synapse-facilitation", "reservoir-waveforms", "interval-consonance", "esm-amplitude",
                         "chua-crypt", "puf-study", "trng-study", "bipful-demo", "srdp-sweep", "lock-map",
                         "photo-hash", "harmonics", "chua-lyapunov"})
    CHECK_THAT(h::experiment_ids(), ContainsSubstring(id));
}

TEST_CASE("unknown experiment lists the valid ids") {
  h::ExperimentConfig cfg;
  cfg.id = "nope";
  CHECK_THROWS_AS(h::run_experiment(cfg), ConfigError);
  CHECK_THROWS_WITH(h::run_experiment(cfg), ContainsSubstring("valid ids: synapse-facilitation"));
}

TEST_CASE("config errors carry a field path") {
  SECTION("unknown parameter") {
    auto cfg = h::parse_config("[params]\nn_bitz = 5\n", "trng-study", "t.toml");
    CHECK_THROWS_WITH(h::run_experiment(cfg), ContainsSubstring("params.n_bitz: unknown key"));
  }
  SECTION("wrong type") {
    auto cfg = h::parse_config("[params]\nn_bits = \"many\"\n", "trng-study", "t.toml");
    CHECK_THROWS_WITH(h::run_experiment(cfg), ContainsSubstring("params.n_bits"));
  }
  SECTION("out of range") {
    auto cfg = h::parse_config("[params]\nthreshold_quantile = 1.5\n", "trng-study", "t.toml");
    CHECK_THROWS_WITH(h::run_experiment(cfg), ContainsSubstring("params.threshold_quantile"));
  }
  SECTION("nested device kind") {
    auto cfg = h::parse_config("[params.device]\nkind = \"toaster\"\n", "trng-study", "t.toml");
    CHECK_THROWS_WITH(h::run_experiment(cfg), ContainsSubstring("params.device.kind"));
  }
  SECTION("TOML syntax") {
    CHECK_THROWS_WITH(h::parse_config("seed = = 3\n", "trng-study", "bad.toml"), ContainsSubstring("bad.toml:1:"));
  }
  SECTION("top level and output") {
    CHECK_THROWS_WITH(h::parse_config("colour = 1\n", "trng-study", "t.toml"), ContainsSubstring("colour: unknown key"));
    CHECK_THROWS_WITH(h::parse_config("[output]\nemit = [\"gif\"]\n", "trng-study", "t.toml"),
                      ContainsSubstring("output.emit[0]"));
    CHECK_THROWS_WITH(h::parse_config("experiment = \"lock-map\"\n", "trng-study", "t.toml"),
                      ContainsSubstring("experiment"));
    CHECK_THROWS_AS(h::parse_config("seed = -1\n", "trng-study", "t.toml"), ConfigError);
  }
}

TEST_CASE("same config gives a byte-identical report") {
  auto a = h::parse_config(kTrng, "trng-study", "a.toml");
  auto b = a;
  a.out_dir = scratch("same_a");
  b.out_dir = scratch("same_b");
  h::run_experiment(a);
  h::run_experiment(b);
  auto ja = nlohmann::json::parse(slurp(a.out_dir / "report.json"));
  auto jb = nlohmann::json::parse(slurp(b.out_dir / "report.json"));
  ja["config"]["output"].erase("dir");
  jb["config"]["output"].erase("dir");
  CHECK(ja == jb);
  CHECK(slurp(a.out_dir / "fair.bits") == slurp(b.out_dir / "fair.bits"));
}

TEST_CASE("a different seed changes the data but not the schema") {
  auto a = h::parse_config(kTrng, "trng-study", "a.toml");
  auto b = a;
  b.seed = 12;
  a.out_dir = scratch("seed_a");
  b.out_dir = scratch("seed_b");
  const auto ra = h::run_experiment(a);
  const auto rb = h::run_experiment(b);
  CHECK(slurp(a.out_dir / "fair.bits") != slurp(b.out_dir / "fair.bits"));
  std::vector<std::string> ka, kb;
  for (const auto& [k, v] : ra.metrics) ka.push_back(k);
  for (const auto& [k, v] : rb.metrics) kb.push_back(k);
  CHECK(ka == kb);
  CHECK(ra.artifacts == rb.artifacts);
}

TEST_CASE("report echoes every parameter, including defaults") {
  auto cfg = h::parse_config(kTrng, "trng-study", "a.toml");
  cfg.out_dir = scratch("echo");
  const auto r = h::run_experiment(cfg);
  const auto& params = r.config.at("params");
  CHECK(params.at("n_bits") == 2000);
  CHECK(params.contains("biased_quantile"));
  CHECK(params.at("device").at("kind") == "stochastic-switch");
  CHECK(r.config.at("seed") == 11);
  CHECK(r.config.at("rng").get<std::string>().find("xoshiro256**") != std::string::npos);
}

TEST_CASE("emit list gates the written formats") {
  auto cfg = h::parse_config("[output]\nemit = [\"json\"]\n[params]\nn_bits = 500\nkeystream_check = false\n",
                             "trng-study", "a.toml");
  cfg.out_dir = scratch("gate");
  const auto r = h::run_experiment(cfg);
  CHECK(r.artifacts == std::vector<std::string>{"report.json"});
  CHECK_FALSE(fs::exists(cfg.out_dir / "fair.bits"));
}

TEST_CASE("CSV output") {
  const auto dir = scratch("csv");
  io::Table t;
  t.add("x", {0.1});
  t.add("y", {-2.5});
  io::write_csv(dir / "one.csv", t);
  const auto text = slurp(dir / "one.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.rfind("x,y\n", 0) == 0);

  io::Table bad;
  bad.add("a", {1, 2});
  bad.add("b", {1});
  CHECK_THROWS_AS(io::write_csv(dir / "bad.csv", bad), InvalidInput);
}

TEST_CASE("floats survive a text round trip") {
  const auto dir = scratch("float");
  Rng rng(2);
  io::Table t;
  std::vector<double> v{0.1, 1.0 / 3.0, 1e-300, -4.9406564584124654e-324, 6.02214076e23, std::nextafter(1.0, 2.0)};
  for (int k = 0; k < 200; ++k) v.push_back(rng.normal() * std::pow(10.0, rng.uniform(-30, 30)));
  t.add("v", v);
  io::write_csv(dir / "f.csv", t);
  const auto back = io::read_csv(dir / "f.csv");
  REQUIRE(back.columns.size() == 1);
  REQUIRE(back.columns[0].size() == v.size());
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(back.columns[0][k] == v[k]);
}

TEST_CASE("PGM round trip") {
  const auto dir = scratch("pgm");
  Rng rng(3);
  for (auto [w, hgt] : {std::pair<std::size_t, std::size_t>{1, 1}, {7, 3}, {64, 65}}) {
    Image img(w, hgt);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    io::write_pgm(dir / "i.pgm", img);
    CHECK(io::read_pgm(dir / "i.pgm") == img);
  }
}

TEST_CASE("bit stream round trip") {
  const auto dir = scratch("bits");
  Rng rng(4);
  for (std::size_t n : {1u, 8u, 13u, 1000u}) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    io::write_bits(dir / "s.bits", bits, "test");
    CHECK(io::read_bits(dir / "s.bits") == bits);
    CHECK(fs::file_size(dir / "s.bits") == (n + 7) / 8);
  }
}

TEST_CASE("every shipped config parses and configures") {
  const fs::path dir = fs::path(NEUROMIME_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".toml") continue;
    const auto text = slurp(entry.path());
    const auto t = toml::parse(text);
    const std::string id = t["experiment"].value_or(std::string{});
    INFO(entry.path().filename().string());
    REQUIRE_FALSE(id.empty());
    const auto cfg = h::load_config(entry.path(), id);
    const auto it = std::find_if(h::registry().begin(), h::registry().end(), [&](auto& e) { return e.id == id; });
    REQUIRE(it != h::registry().end());
    h::Params params(&cfg.params, "params");
    CHECK_NOTHROW(it->configure(params));
    CHECK_NOTHROW(params.finish());
    ++seen;
  }
  CHECK(seen >= 13);
}
