#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

#include "nsrlab/commands.hpp"
#include "nsrlab/container.hpp"
#include "nsrlab/genflow.hpp"
#include "nsrlab/report.hpp"

using namespace nsrlab;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI in `dir` with stderr folded away; returns exit status and stdout.
Run cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" NSRLAB_BIN "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("nsrlab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json report(const Run& r) { return nlohmann::json::parse(r.out); }

const char* kZeroGen = "generate --family abc --A 0 --B 0 --C 0 --n 32 --nt 5 --dt 0.64 --no-timestamp";

}  // namespace

// ------------------------------------------------------------- container

TEST_CASE("container round trip is byte identical") {
  FlowSpec s;
  s.with_vorticity = true;
  const FieldStack f = generate(s, make_grid(8, 3, 2 * kPi, 0.1, -0.5));
  const auto bytes = encode_container(f);
  ContainerInfo info;
  const FieldStack back = decode_container(bytes, &info);
  CHECK(encode_container(back) == bytes);
  CHECK(back.grid == f.grid);
  CHECK(back.w_derived);
  CHECK(back.ns_solution);
  CHECK(info.entries.size() == 3);
  CHECK(info.entries[0].offset == kContainerHeaderBytes + 3 * kContainerEntryBytes);
  CHECK(bytes.size() == kContainerHeaderBytes + 3 * kContainerEntryBytes + 8 * 8 * 8 * 3 * (3 + 1 + 3) * 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "NSRL");
  for (int j = 0; j < 3; ++j) CHECK((back.u.slice(j) - f.u.slice(j)).abs().maxCoeff() == 0.0);
}

TEST_CASE("container header fields are little-endian at fixed offsets") {
  const FieldStack f = generate(FlowSpec{}, make_grid(8, 2, 1.0, 0.25, 2.0));
  const auto b = encode_container(f);
  auto u32 = [&](std::size_t o) { return b[o] | b[o + 1] << 8 | b[o + 2] << 16 | std::uint32_t(b[o + 3]) << 24; };
  CHECK((b[4] | b[5] << 8) == kContainerVersion);
  CHECK((b[6] | b[7] << 8) == 2);
  CHECK(u32(8) == 8);
  CHECK(u32(20) == 2);
  double t0;
  std::memcpy(&t0, b.data() + 40, 8);
  CHECK(t0 == 2.0);
  CHECK(u32(48) == crc32_of(b.data() + 136, b.size() - 136));
}

TEST_CASE("corrupted containers raise IntegrityError") {
  const auto good = encode_container(generate(FlowSpec{}, make_grid(8, 2, 1.0, 0.25, 0)));
  auto flip = good;
  flip.back() ^= 0x01;
  CHECK_THROWS_AS(decode_container(flip), IntegrityError);
  auto magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_container(magic), IntegrityError);
  auto version = good;
  version[4] = 9;
  CHECK_THROWS_AS(decode_container(version), IntegrityError);
  auto shorter = good;
  shorter.pop_back();
  CHECK_THROWS_AS(decode_container(shorter), IntegrityError);
  auto longer = good;
  longer.push_back(0);
  CHECK_THROWS_AS(decode_container(longer), IntegrityError);
  CHECK_THROWS_AS(decode_container({}), IntegrityError);
}

// ---------------------------------------------------------------- config

TEST_CASE("run config round trips through JSON") {
  RunConfig c;
  c.command = "diagnose";
  c.input = "in.nsrl";
  c.kinds = {{CriterionKind::velocity, Exponent(2), Exponent(4), 0.1}};
  c.ladder_r0 = 1.5;
  c.t = 0.75;
  c.q = Exponent(3, 2);
  c.flow.center = Eigen::Vector3d(1, 2, 3);
  const RunConfig back = run_config_from_json(to_json(c));
  CHECK(back == c);
  CHECK(to_json(back).dump() == to_json(c).dump());
}

TEST_CASE("run config rejects unknown keys") {
  Json j = to_json(RunConfig{});
  j["diagnose"]["bogus"] = 1;
  CHECK_THROWS_AS(run_config_from_json(j), ValidationError);
}

TEST_CASE("non-finite numbers serialise as strings") {
  CHECK(number(INFINITY) == "inf");
  CHECK(number(-INFINITY) == "-inf");
  CHECK(number(NAN) == "nan");
  CHECK(number(1.5) == 1.5);
}

TEST_CASE("exit codes map error classes") {
  auto code = [](auto e) { return exit_code_for(std::make_exception_ptr(e)); };
  CHECK(code(ValidationError("x")) == kExitUsage);
  CHECK(code(IntegrityError("x")) == kExitIntegrity);
  CHECK(code(NumericError("x")) == kExitNumeric);
  CHECK(code(IoError("x")) == kExitIo);
  CHECK(code(std::runtime_error("x")) == kExitIo);
}

TEST_CASE("parallel_for runs everything and rethrows the lowest failing index") {
  std::vector<int> hit(50, 0);
  parallel_for(50, 4, [&](int i) { hit[i] = 1; });
  for (int h : hit) CHECK(h == 1);
  try {
    parallel_for(10, 3, [](int i) {
      if (i == 7 || i == 4) throw ValidationError(std::to_string(i));
    });
    FAIL("expected a throw");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "4");
  }
}

// ------------------------------------------------------------------- CLI

TEST_CASE("generate writes a verifiable container and is deterministic") {
  TempDir d;
  const Run a = cli(d.path, "generate --family abc --n 32 --nt 16 --nu 0.1 -o a.nsrl --no-timestamp");
  REQUIRE(a.code == 0);
  const auto j = report(a);
  CHECK(j["container"]["fields"].size() == 2);
  CHECK(j["container"]["fields"][0]["name"] == "u");
  CHECK(j["container"]["fields"][1]["name"] == "p");
  ContainerInfo info;
  const FieldStack f = read_container((d.path / "a.nsrl").string(), &info);
  char crc[16];
  std::snprintf(crc, sizeof crc, "0x%08x", info.crc);
  CHECK(j["container"]["crc32"] == crc);
  CHECK(f.grid.nt == 16);

  REQUIRE(cli(d.path, "generate --family abc --n 32 --nt 16 --nu 0.1 -o b.nsrl --no-timestamp").code == 0);
  CHECK(slurp(d.path / "a.nsrl") == slurp(d.path / "b.nsrl"));
}

TEST_CASE("generate with zero amplitudes writes an all-zero payload") {
  TempDir d;
  REQUIRE(cli(d.path, std::string(kZeroGen) + " -o z.nsrl").code == 0);
  const auto bytes = read_file((d.path / "z.nsrl").string());
  const ContainerInfo info = inspect_container(bytes);
  const std::size_t start = info.entries.front().offset;
  CHECK(std::all_of(bytes.begin() + start, bytes.end(), [](std::uint8_t b) { return b == 0; }));
  const std::vector<std::uint8_t> zeros(bytes.size() - start, 0);
  CHECK(info.crc == crc32_of(zeros.data(), zeros.size()));
}

TEST_CASE("generate rejects invalid specs with exit 2") {
  TempDir d;
  CHECK(cli(d.path, "generate --family nope").code == 2);
  CHECK(cli(d.path, "generate --n 4").code == 2);
  CHECK(cli(d.path, "frobnicate").code == 2);
}

TEST_CASE("diagnose on zeros is regular everywhere and deterministic") {
  TempDir d;
  REQUIRE(cli(d.path, std::string(kZeroGen) + " -o z.nsrl").code == 0);
  const Run a = cli(d.path, "diagnose z.nsrl --x 1.3 2.1 0.7 --no-timestamp");
  REQUIRE(a.code == 0);
  const auto j = report(a);
  CHECK(j["criteria"].size() == 4);
  for (const auto& [k, v] : j["criteria"].items()) CHECK_MESSAGE(v["verdict"]["status"] == "regular", k);
  CHECK(j["ckn"]["status"] == "regular");
  const Run b = cli(d.path, "diagnose z.nsrl --x 1.3 2.1 0.7 --no-timestamp");
  CHECK(a.out == b.out);
  CHECK(a.out.find("generated_at") == std::string::npos);
  CHECK(cli(d.path, "diagnose z.nsrl --x 1.3 2.1 0.7").out.find("generated_at") != std::string::npos);
}

TEST_CASE("diagnose on the ABC flow is regular with decay") {
  TempDir d;
  REQUIRE(cli(d.path, "generate --family abc --A 0.02 --B 0.02 --C 0.02 --n 64 --nt 9 --dt 0.32 -o a.nsrl").code == 0);
  const Run r = cli(d.path, "diagnose a.nsrl --x 1.3 2.1 0.7 --r0 1.6 --k-max 6 --no-contraction --no-timestamp");
  REQUIRE(r.code == 0);
  for (const auto& [k, v] : report(r)["criteria"].items()) {
    CHECK_MESSAGE(v["verdict"]["status"] == "regular", k);
    CHECK_MESSAGE(v["verdict"]["trend_slope"].get<double>() > 0.0, k);
  }
}

TEST_CASE("diagnose flags the homogeneous mock at its centre") {
  TempDir d;
  REQUIRE(cli(d.path, "generate --family homogeneous_minus_one --n 64 --nt 5 --dt 0.64 -o m.nsrl").code == 0);
  const Run r = cli(d.path,
                    "diagnose m.nsrl --x 3.141592653589793 3.141592653589793 3.141592653589793 --kind velocity "
                    "--r0 1.6 --no-contraction --no-timestamp");
  REQUIRE(r.code == 0);
  CHECK(report(r)["criteria"]["velocity"]["verdict"]["status"] == "flagged");
}

TEST_CASE("checksum mismatch exits with 3") {
  TempDir d;
  REQUIRE(cli(d.path, std::string(kZeroGen) + " -o z.nsrl").code == 0);
  auto bytes = read_file((d.path / "z.nsrl").string());
  bytes.back() ^= 0x40;
  write_file((d.path / "bad.nsrl").string(), bytes);
  CHECK(cli(d.path, "diagnose bad.nsrl --x 1 1 1").code == 3);
  CHECK(cli(d.path, "diagnose missing.nsrl --x 1 1 1").code == 1);
}

TEST_CASE("infeasible ladders give a partial report with warnings") {
  TempDir d;
  REQUIRE(cli(d.path, std::string(kZeroGen) + " -o z.nsrl").code == 0);
  // r0 = 0.5 is below the 4h floor of this grid
  const Run r = cli(d.path, "diagnose z.nsrl --x 1 1 1 --r0 0.5 --no-timestamp");
  CHECK(r.code == 0);
  CHECK_FALSE(report(r)["warnings"].empty());
}

TEST_CASE("audit: zeros are trivial, ABC keeps L3-1 small, 2r > rho is refused") {
  TempDir d;
  REQUIRE(cli(d.path, std::string(kZeroGen) + " -o z.nsrl").code == 0);
  const Run z = cli(d.path, "audit z.nsrl --x 1.3 2.1 0.7 --r 0.8 --rho 1.6 --no-timestamp");
  REQUIRE(z.code == 0);
  CHECK(report(z)["all_trivially_satisfied"] == true);

  REQUIRE(cli(d.path, "generate --family abc --n 32 --nt 5 --dt 0.64 -o a.nsrl").code == 0);
  const Run a = cli(d.path, "audit a.nsrl --x 1.3 2.1 0.7 --r 0.8 --rho 1.6 --q 2 --lemma L3-1 --no-timestamp");
  REQUIRE(a.code == 0);
  const auto j = report(a);
  REQUIRE(j["lemmas"].size() == 1);
  CHECK(j["lemmas"][0]["fitted_constant"].get<double>() <= 32.0);

  CHECK(cli(d.path, "audit a.nsrl --x 1.3 2.1 0.7 --r 0.9 --rho 1.6").code == 2);
  CHECK(cli(d.path, "audit a.nsrl --x 1.3 2.1 0.7 --r 0.8 --rho 1.6 --lemma nope").code == 2);
}

TEST_CASE("audit results do not depend on the worker count") {
  TempDir d;
  REQUIRE(cli(d.path, "generate --family abc --n 32 --nt 5 --dt 0.64 -o a.nsrl").code == 0);
  const std::string args = "audit a.nsrl --x 1.3 2.1 0.7 --r 0.8 --rho 1.6 --no-timestamp";
  const Run one = cli(d.path, args, "NSRLAB_WORKERS=1");
  const Run three = cli(d.path, args, "NSRLAB_WORKERS=3");
  REQUIRE(one.code == 0);
  CHECK(one.out == three.out);
  CHECK(cli(d.path, args, "NSRLAB_WORKERS=zero").code == 2);
}

TEST_CASE("scale-check: lambda = 1 is exact, ABC under lambda = 2 stays within 2%, broken scaling is caught") {
  TempDir d;
  REQUIRE(cli(d.path, "generate --family abc --n 64 --nt 17 --dt 0.16 -o a.nsrl").code == 0);
  const std::string base = "scale-check a.nsrl --x 2.6 4.2 1.4 --radii 0.8,0.7 --no-timestamp";
  const Run one = cli(d.path, base + " --lambda 1");
  REQUIRE(one.code == 0);
  CHECK(report(one)["overall_max_mismatch"].get<double>() == 0.0);

  const Run two = cli(d.path, base + " --lambda 2 --functional A,E,C,Ctilde,D");
  REQUIRE(two.code == 0);
  CHECK(report(two)["overall_max_mismatch"].get<double>() < 0.02);

  const Run broken = cli(d.path, base + " --lambda 2 --functional C --test-velocity-power 0");
  REQUIRE(broken.code == 0);
  CHECK(report(broken)["overall_max_mismatch"].get<double>() >= 0.5);

  CHECK(cli(d.path, base + " --lambda 3").code == 2);
}

TEST_CASE("config files feed flags and --dump-config echoes the result") {
  TempDir d;
  RunConfig c;
  c.command = "diagnose";
  c.epsilon = 0.07;
  {
    std::ofstream out(d.path / "cfg.json");
    out << to_json(c).dump(2);
  }
  const Run r = cli(d.path, "diagnose in.nsrl --config cfg.json --theta 0.1 --dump-config");
  REQUIRE(r.code == 0);
  const RunConfig back = run_config_from_json(Json::parse(r.out));
  CHECK(back.epsilon == 0.07);
  CHECK(back.theta == 0.1);
  CHECK(back.input == "in.nsrl");
}
