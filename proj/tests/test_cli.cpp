#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using mcdgln::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text(p)); }

fs::path small_config_file(const fs::path& dir, const std::string& extra = "", const std::string& name = "run.txt") {
  std::string text;
  auto cfg = testing::small_config();
  cfg.epochs = 2;
  for (const auto& [k, v] : cfg.to_key_values())
    if (k != "seed" && extra.find(k + "=") == std::string::npos) text += k + "=" + v + "\n";
  write_text(dir / name, text + extra);
  return dir / name;
}

}  // namespace

TEST_CASE("synth") {
  const auto dir = testing::scratch_dir("cli-synth");
  write_text(dir / "spec.txt", "n_subjects=6\nrois=6\ntimepoints=30\nmodules=2\nplanted_edges=2\nseed=3\n");
  const auto a = invoke({"synth", "--spec", (dir / "spec.txt").string(), "--out", (dir / "a").string()});
  CHECK(a.code == 0);
  CHECK(fs::exists(dir / "a" / "manifest.csv"));
  CHECK(a.out.find("controls 3, cases 3") != std::string::npos);
  invoke({"synth", "--spec", (dir / "spec.txt").string(), "--out", (dir / "b").string()});
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "a");
    CHECK(read_text(e.path()) == read_text(dir / "b" / rel));
  }

  const auto c = invoke({"synth", "--spec", (dir / "spec.txt").string(), "--out", (dir / "c").string(), "--seed", "4"});
  CHECK(c.code == 0);
  CHECK(read_text(dir / "c" / "bold" / "sub-000.csv") != read_text(dir / "a" / "bold" / "sub-000.csv"));

  const auto missing = invoke({"synth", "--spec", (dir / "nope.txt").string(), "--out", (dir / "d").string()});
  CHECK(missing.code == 2);
  CHECK_FALSE(missing.err.empty());
  write_text(dir / "bad.txt", "rois=1\n");
  CHECK(invoke({"synth", "--spec", (dir / "bad.txt").string(), "--out", (dir / "e").string()}).code == 2);
}

TEST_CASE("argument errors") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"cv", "--data", "x.csv"}).code == 2);
  CHECK(invoke({"gradcheck", "--size", "huge"}).code == 2);
}

TEST_CASE("cv, train, eval and analyze") {
  const auto dir = testing::scratch_dir("cli-run");
  const auto manifest = testing::small_dataset("cli-data", 12);
  const auto cfg = small_config_file(dir);

  const auto cv = invoke({"cv", "--data", manifest.string(), "--config", cfg.string(), "--out",
                          (dir / "cv.json").string(), "--seed", "2"});
  REQUIRE(cv.code == 0);
  CHECK(cv.out.find("accuracy") != std::string::npos);
  const auto rep = read_json(dir / "cv.json");
  CHECK(rep["config"]["seed"] == 2);
  CHECK(rep["config"]["hidden"] == 6);
  CHECK(rep["folds"].size() == 2);
  double acc = 0;
  for (const auto& f : rep["folds"]) acc += f["accuracy"].get<double>();
  CHECK(std::abs(rep["mean"]["accuracy"].get<double>() - acc / 2) <= 1e-12);

  const auto again = invoke({"cv", "--data", manifest.string(), "--config", cfg.string(), "--out",
                             (dir / "cv2.json").string(), "--seed", "2"});
  CHECK(again.code == 0);
  CHECK(read_text(dir / "cv.json") == read_text(dir / "cv2.json"));

  const auto many = small_config_file(dir, "folds=50\n", "many.txt");
  CHECK(invoke({"cv", "--data", manifest.string(), "--config", many.string(), "--out", (dir / "x.json").string()})
            .code == 3);

  const auto tr = invoke({"train", "--data", manifest.string(), "--config", cfg.string(), "--out",
                          (dir / "model.ckpt").string(), "--holdout", "0.25"});
  REQUIRE(tr.code == 0);
  CHECK(fs::exists(dir / "model.ckpt"));
  CHECK(read_json(dir / "model.ckpt.json")["test_subjects"] == 4);

  const auto ev = invoke({"eval", "--data", manifest.string(), "--config", cfg.string(), "--checkpoint",
                          (dir / "model.ckpt").string(), "--out", (dir / "eval.json").string()});
  CHECK(ev.code == 0);
  CHECK(read_json(dir / "eval.json")["scores"].size() == 12);

  // A checkpoint trained at M = 6 cannot evaluate M = 8 data.
  mcdgln::io::SynthSpec wide;
  wide.n_subjects = 4;
  wide.rois = 8;
  wide.timepoints = 60;
  wide.modules = 2;
  wide.planted_edges = 1;
  const auto wide_manifest = mcdgln::io::generate_synthetic(wide, testing::scratch_dir("cli-wide")).manifest;
  CHECK(invoke({"eval", "--data", wide_manifest.string(), "--config", cfg.string(), "--checkpoint",
                (dir / "model.ckpt").string()})
            .code == 5);
  write_text(dir / "junk.ckpt", "not a checkpoint\n");
  CHECK(invoke({"eval", "--data", manifest.string(), "--config", cfg.string(), "--checkpoint",
                (dir / "junk.ckpt").string()})
            .code == 5);

  const auto an = invoke({"analyze", "--data", manifest.string(), "--config", cfg.string(), "--checkpoint",
                          (dir / "model.ckpt").string(), "--out", (dir / "an.json").string(), "--alpha", "0.05"});
  CHECK(an.code == 0);
  const auto aj = read_json(dir / "an.json");
  CHECK(aj["sfc"].size() == 15);
  CHECK(aj["alpha"] == 0.05);
  CHECK(aj.contains("overlap"));
}

TEST_CASE("analyze on identical groups finds nothing") {
  const auto dir = testing::scratch_dir("cli-identical");
  const auto manifest = testing::small_dataset("cli-identical-data", 8);
  const auto base = manifest.parent_path();
  std::string text = "subject_id,label,path\n";
  for (int i = 0; i < 8; i += 2) {
    char id[16];
    std::snprintf(id, sizeof id, "sub-%03d", i);
    const auto path = (base / "bold" / (std::string(id) + ".csv")).string();
    text += std::string(id) + "-a,0," + path + "\n" + std::string(id) + "-b,1," + path + "\n";
  }
  write_text(dir / "manifest.csv", text);
  const auto cfg = small_config_file(dir);
  const auto an = invoke({"analyze", "--data", (dir / "manifest.csv").string(), "--config", cfg.string(), "--out",
                          (dir / "an.json").string()});
  REQUIRE(an.code == 0);
  const auto j = read_json(dir / "an.json");
  CHECK(j["overlap"]["overlap"] == 0);
  CHECK(j["overlap"]["sfc_only"] == 0);
  CHECK(j["overlap"]["tsfc_only"] == 0);
}

TEST_CASE("data errors exit with 3") {
  const auto dir = testing::scratch_dir("cli-data-errors");
  write_text(dir / "manifest.csv", "subject_id,label,path\n");
  CHECK(invoke({"cv", "--data", (dir / "manifest.csv").string(), "--out", (dir / "r.json").string()}).code == 3);
  CHECK(invoke({"cv", "--data", (dir / "absent.csv").string(), "--out", (dir / "r.json").string()}).code == 3);
}

TEST_CASE("seed precedence") {
  const auto dir = testing::scratch_dir("cli-seed");
  const auto manifest = testing::small_dataset("cli-seed-data", 8);
  const auto cfg = small_config_file(dir);
  const auto seeded = small_config_file(dir, "seed=11\n", "seeded.txt");

  auto seed_of = [&](const std::vector<std::string>& extra) {
    std::vector<std::string> args{"cv", "--data", manifest.string(), "--out", (dir / "s.json").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(invoke(args).code == 0);
    return read_json(dir / "s.json")["config"]["seed"].get<std::uint64_t>();
  };
  setenv("MCDGLN_SEED", "21", 1);
  CHECK(seed_of({"--config", cfg.string()}) == 21);
  CHECK(seed_of({"--config", seeded.string()}) == 11);
  CHECK(seed_of({"--config", seeded.string(), "--seed", "5"}) == 5);
  unsetenv("MCDGLN_SEED");
  CHECK(seed_of({"--config", cfg.string()}) == 0);
}

TEST_CASE("gradcheck") {
  const auto r = invoke({"gradcheck", "--size", "toy"});
  CHECK(r.code == 0);
  const auto pos = r.out.find("max relative error ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(r.out.substr(pos + 19)) < 1e-4);
}
