#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scar/cli.hpp"
#include "scar/io.hpp"
#include "test_support.hpp"

using namespace scar;
using scar::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(bool(in), "missing file " << path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Captures std::cerr for the duration of one CLI call.
struct CerrCapture {
  CerrCapture() : old(std::cerr.rdbuf(buffer.rdbuf())) {}
  ~CerrCapture() { std::cerr.rdbuf(old); }
  std::ostringstream buffer;
  std::streambuf* old;
};

}  // namespace

TEST_CASE("synth is deterministic and splits 80/20") {
  TempDir dir("cli_synth");
  const auto run = [&](const std::string& sub) {
    return run_cli({"synth", "--out", (dir.path() / sub).string(), "--n-scenes", "20", "--seed",
                    "7", "--height", "48", "--width", "64"});
  };
  CHECK(run("a") == 0);
  CHECK(run("b") == 0);
  const std::string ma = slurp(dir.path() / "a" / "manifest.txt");
  CHECK(ma == slurp(dir.path() / "b" / "manifest.txt"));  // byte-identical

  int train_lines = 0, test_lines = 0;
  std::istringstream in(ma);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("train\t", 0) == 0) ++train_lines;
    if (line.rfind("test\t", 0) == 0) ++test_lines;
  }
  CHECK(train_lines == 16);
  CHECK(test_lines == 4);
}

TEST_CASE("synth with a zero head range emits only empty point lists") {
  TempDir dir("cli_synth0");
  CHECK(run_cli({"synth", "--out", dir.path().string(), "--n-scenes", "5", "--heads-min", "0",
                 "--heads-max", "0", "--height", "32", "--width", "32"}) == 0);
  std::istringstream in(slurp(dir.path() / "manifest.txt"));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    CHECK(line.substr(line.rfind('\t') + 1) == "-");
  }
  CHECK(lines == 5);
}

TEST_CASE("gt emits density files that integrate to the head count") {
  TempDir dir("cli_gt");
  const auto data = dir.path() / "data";
  CHECK(run_cli({"synth", "--out", data.string(), "--n-scenes", "3", "--heads-min", "1",
                 "--heads-max", "1", "--height", "40", "--width", "40", "--seed", "3"}) == 0);
  const auto out = dir.path() / "maps";
  CHECK(run_cli({"gt", "--manifest", (data / "manifest.txt").string(), "--root", data.string(),
                 "--out", out.string(), "--sigma", "2.0"}) == 0);
  const DensityMap map = read_density_map(out / "scene_0000.dmp");
  CHECK(map.h == 40);
  CHECK(map.w == 40);
  CHECK(map.sum() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("train, eval and visualize chain through the CLI") {
  TempDir dir("cli_chain");
  const auto data = dir.path() / "data";
  REQUIRE(run_cli({"synth", "--out", data.string(), "--n-scenes", "5", "--heads-min", "2",
                   "--heads-max", "6", "--height", "32", "--width", "32", "--seed", "11"}) == 0);

  const auto run_dir = dir.path() / "run";
  write_text(dir.path() / "exp.cfg",
             "manifest = " + (data / "manifest.txt").string() + "\n" +
                 "data_root = " + data.string() + "\n" + "out_dir = " + run_dir.string() + "\n" +
                 "variant = SCAR\nfusion = concat\nepochs = 1\nbatch_size = 2\n"
                 "input_height = 32\ninput_width = 32\nsigma = 1.5\n"
                 "conv3_channels = 16\nattention_channels = 8\ncheckpoint_every = 0\n");
  CHECK(run_cli({"train", "--config", (dir.path() / "exp.cfg").string()}) == 0);
  const auto ckpt = run_dir / "checkpoint_final";
  CHECK(std::filesystem::exists(ckpt / "meta.txt"));
  CHECK(std::filesystem::exists(run_dir / "train_log.txt"));

  const auto report_a = dir.path() / "report_a.txt";
  const auto report_b = dir.path() / "report_b.txt";
  const std::vector<std::string> eval_args = {
      "eval",    "--checkpoint", ckpt.string(),       "--manifest", (data / "manifest.txt").string(),
      "--root",  data.string(),  "--height",          "32",         "--width",
      "32",      "--sigma",      "1.5"};
  auto with_out = [&](const std::filesystem::path& p) {
    auto args = eval_args;
    args.push_back("--out");
    args.push_back(p.string());
    return args;
  };
  CHECK(run_cli(with_out(report_a)) == 0);
  CHECK(run_cli(with_out(report_b)) == 0);
  CHECK(slurp(report_a) == slurp(report_b));  // idempotent reruns

  const auto vis = dir.path() / "vis";
  CHECK(run_cli({"visualize", "--checkpoint", ckpt.string(), "--image",
                 (data / "scene_0000.png").string(), "--out", vis.string(), "--channels",
                 "0,1"}) == 0);
  CHECK(std::filesystem::exists(vis / "scene_0000_sam_ch0.png"));
  CHECK(std::filesystem::exists(vis / "scene_0000_cam_ch1.png"));
  CHECK(std::filesystem::exists(vis / "scene_0000_density.png"));
}

TEST_CASE("eval on a foreign directory names the expected format tag") {
  TempDir dir("cli_badckpt");
  const auto fake = dir.path() / "fake";
  std::filesystem::create_directories(fake);
  write_text(fake / "meta.txt", "format=OTHERFMT1\nvariant=FCN\n");
  CerrCapture capture;
  const int code = run_cli({"eval", "--checkpoint", fake.string(), "--manifest", "x", "--root",
                            dir.path().string()});
  CHECK(code == 2);
  CHECK(capture.buffer.str().find("SCARCKPT1") != std::string::npos);
}

TEST_CASE("unknown config keys abort before any computation") {
  TempDir dir("cli_badkey");
  write_text(dir.path() / "bad.cfg", "not_a_key = 1\n");
  CerrCapture capture;
  CHECK(run_cli({"train", "--config", (dir.path() / "bad.cfg").string()}) == 1);
  CHECK(capture.buffer.str().find("not_a_key") != std::string::npos);
  CHECK(run_cli({"train", "--not_a_flag", "1"}) != 0);
}

TEST_CASE("numerical failures exit with code 3") {
  TempDir dir("cli_nan");
  const auto data = dir.path() / "data";
  REQUIRE(run_cli({"synth", "--out", data.string(), "--n-scenes", "2", "--height", "32",
                   "--width", "32", "--seed", "2"}) == 0);
  CerrCapture capture;
  const int code = run_cli({"train", "--manifest", (data / "manifest.txt").string(), "--data_root",
                            data.string(), "--epochs", "3", "--input_height", "32",
                            "--input_width", "32", "--conv3_channels", "8",
                            "--attention_channels", "4", "--init", "msra", "--lr_initial",
                            "1e30"});
  CHECK(code == 3);
  CHECK(capture.buffer.str().find("batch") != std::string::npos);
}

TEST_CASE("the binary itself runs and reports usage errors") {
  // exercise the installed executable end to end
  const std::string bin = SCAR_CLI_BIN;
  CHECK(std::system((bin + " --help > /dev/null").c_str()) == 0);
  CHECK(std::system((bin + " synth --help > /dev/null").c_str()) == 0);
  CHECK(std::system((bin + " > /dev/null 2>&1").c_str()) != 0);  // missing subcommand
}
