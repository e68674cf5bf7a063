#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "regop/cli.hpp"
#include "regop/io.hpp"

using namespace regop;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "regop");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "regop_cli_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string write_map(const std::string& name, const LinearMap& u) {
  const std::string path = temp_path(name);
  write_json_file(path, map_to_json(u));
  return path;
}

}  // namespace

TEST_CASE("gen output round-trips through the consuming commands") {
  const Run g = run({"gen", "map", "--in", "2", "--out", "3", "--seed", "11"});
  REQUIRE(g.code == 0);
  Rng rng(11);
  const LinearMap expected = random_map(rng, 2, 3);
  const LinearMap parsed = map_from_json(Json::parse(g.out));
  CHECK(parsed.in_dim() == 2);
  CHECK(parsed.out_dim() == 3);
  CHECK((parsed.choi() - expected.choi()).norm() == 0.0);

  const std::string path = temp_path("gen_cp.json");
  REQUIRE(run({"gen", "cp", "--seed", "5", "-o", path}).code == 0);
  const Run c = run({"cpcheck", path});
  REQUIRE(c.code == 0);
  CHECK(Json::parse(c.out)["completely_positive"].get<bool>());
  const Run k = run({"kraus", path});
  REQUIRE(k.code == 0);
  CHECK(Json::parse(k.out)["reconstruction_residual"].get<double>() < 1e-10);

  const std::string block = temp_path("gen_block.json");
  REQUIRE(run({"gen", "block", "--in", "2", "--out", "2", "--seed", "6", "-o", block}).code == 0);
  const BlockMatrix x = block_from_json(read_json_file(block));
  CHECK(x.outer == 2);
  CHECK(x.inner == 2);
  const Run v = run({"vnorm", block, "--p", "inf", "--seed", "1"});
  REQUIRE(v.code == 0);
  const Json b = Json::parse(v.out)["bracket"];
  CHECK(b["lower"].get<double>() == doctest::Approx(b["upper"].get<double>()));
}

TEST_CASE("cpcheck on the transpose") {
  const std::string path = write_map("transpose.json", LinearMap::transpose(2));
  const Run r = run({"cpcheck", path});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["verdict"] == "not CP, margin -1");
  CHECK_FALSE(j["completely_positive"].get<bool>());
  CHECK(run({"kraus", path}).code == kExitFailure);
  const Run cb = run({"cbnorm", path});
  REQUIRE(cb.code == 0);
  CHECK(Json::parse(cb.out)["value"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("regnorm on the identity map") {
  const std::string path = write_map("identity.json", LinearMap::identity(2));
  const Run r = run({"regnorm", path, "--p", "2", "--seed", "3"});
  REQUIRE(r.code == 0);
  const Json reg = Json::parse(r.out)["regular"];
  CHECK(reg["lower"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(reg["upper"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(reg["p"].get<double>() == 2.0);
}

TEST_CASE("reports are byte-identical for identical inputs") {
  Rng rng(2);
  const std::string path = write_map("det.json", random_map(rng, 2, 2));
  const std::vector<std::string> args{"regnorm", path, "--p", "3", "--seed", "9", "-K", "2", "--restarts", "2"};
  const Run a = run(args), b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const Run other = run({"regnorm", path, "--p", "3", "--seed", "10", "-K", "2", "--restarts", "2"});
  CHECK(other.code == 0);
}

TEST_CASE("pair, decompose and extend") {
  Rng rng(4);
  const std::string map = write_map("pair_map.json", random_map(rng, 2, 2));
  const std::string elem = temp_path("pair_elem.json");
  write_json_file(elem, block_to_json(BlockMatrix(2, 2, rng.gaussian(4, 4))));
  const Run p = run({"pair", map, elem, "--p", "2", "--seed", "1", "--restarts", "2"});
  REQUIRE(p.code == 0);
  const Json pj = Json::parse(p.out);
  CHECK(pj["duality_holds"].get<bool>());
  CHECK(pj["pairing"] == pj["pairing_factored"]);

  const Run d = run({"decompose", map, "--p", "2", "--seed", "1"});
  REQUIRE(d.code == 0);
  const Json dj = Json::parse(d.out);
  CHECK(dj["recombination_residual"].get<double>() < 1e-7);
  REQUIRE(dj["parts"].size() == 4);
  for (const Json& part : dj["parts"]) CHECK(is_cp(map_from_json(part), 1e-7).completely_positive);

  Json sub;
  sub["n"] = 2;
  sub["out_dim"] = 2;
  sub["basis"] = Json::array({matrix_to_json(unit(2, 0, 0))});
  sub["images"] = Json::array({matrix_to_json(unit(2, 0, 0))});
  const std::string spath = temp_path("subspace.json");
  write_json_file(spath, sub);
  const Run e = run({"extend", spath, "--p", "inf", "--seed", "1"});
  REQUIRE(e.code == 0);
  const Json ej = Json::parse(e.out);
  CHECK(ej["restriction_residual"].get<double>() <= 1e-8);
  CHECK(ej["upper"].get<double>() == doctest::Approx(1.0).epsilon(1e-5));
  const LinearMap ext = map_from_json(ej["extension"]);
  CHECK((ext.apply(unit(2, 0, 0)) - unit(2, 0, 0)).norm() < 1e-8);
}

TEST_CASE("usage errors exit with status 2") {
  const std::string path = write_map("usage.json", LinearMap::identity(2));
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"regnorm", path, "--p", "2"}).code == kExitUsage);  // no seed
  CHECK(run({"regnorm", path, "--p", "2", "--seed", "1", "--bogus"}).code == kExitUsage);
  CHECK(run({"regnorm", path, "--p", "0.5", "--seed", "1"}).code == kExitUsage);
  CHECK(run({"regnorm", path, "--p", "abc", "--seed", "1"}).code == kExitUsage);
  CHECK(run({"regnorm", path, "--p", "2", "--seed", "1", "-K", "9"}).code == kExitUsage);
  CHECK(run({"cpcheck", temp_path("missing.json")}).code == kExitUsage);
  CHECK(run({"gen", "tensor", "--seed", "1"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("malformed files report their location") {
  const std::string bad = temp_path("bad.json");
  {
    Json j = map_to_json(LinearMap::identity(2));
    j["choi"]["data"][3] = "x";
    write_json_file(bad, j);
  }
  const Run r = run({"cpcheck", bad});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("$.choi.data[3]") != std::string::npos);

  const std::string broken = temp_path("broken.json");
  {
    std::ofstream out(broken);
    out << "{\"in_dim\": 2,";
  }
  const Run b = run({"cbnorm", broken});
  CHECK(b.code == kExitUsage);
  CHECK(b.err.find("parse error") != std::string::npos);

  const std::string pair_map = write_map("mismatch_map.json", LinearMap::identity(2));
  const std::string elem = temp_path("mismatch_elem.json");
  write_json_file(elem, block_to_json(BlockMatrix::zero(3, 2)));
  CHECK(run({"pair", pair_map, elem, "--p", "2", "--seed", "1"}).code == kExitUsage);
}

TEST_CASE("verify emits one entry per selected criterion") {
  const Run r = run({"verify", "--seed", "7", "--only", "2", "--only", "6"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  REQUIRE(j["criteria"].size() == 2);
  CHECK(j["criteria"][0]["id"] == 2);
  CHECK(j["criteria"][0]["passed"].get<bool>());
  CHECK(j["passed"] == 2);
  CHECK(r.err.find("PASS 02") != std::string::npos);
  CHECK(run({"verify", "--seed", "7", "--only", "2"}).out == run({"verify", "--seed", "7", "--only", "2"}).out);
}
