#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "mixred/io.hpp"
#include "mixred/simulate.hpp"

using namespace mixred;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mixred_test_cli";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("simulate is deterministic and readable") {
  const Run a = run({"simulate", "--seed", "4"});
  const Run b = run({"simulate", "--seed", "4"});
  CHECK(a.code == cli::kExitOk);
  CHECK(a.out == b.out);
  CHECK(run({"simulate", "--seed", "5"}).out != a.out);
  const GaussianMixture m = mixture_from_json(Json::parse(a.out));
  CHECK(m.order() == 25);
  CHECK(m.component(7).cov() == simulate_mixture(4).component(7).cov());
}

TEST_CASE("reduce") {
  const auto mix = scratch("mix.json");
  write_json_file(mix, to_json(simulate_mixture(8)));
  const Run r = run({"reduce", "--mixture", mix.string(), "--M", "3", "--restarts", "2", "--seed", "1"});
  REQUIRE(r.code == cli::kExitOk);
  const Json j = Json::parse(r.out);
  CHECK(j.at("reduced").at("weights").size() == 3);
  CHECK(run({"reduce", "--mixture", mix.string(), "--M", "3", "--restarts", "2", "--seed", "1"}).out == r.out);

  const auto csv = scratch("reduce.csv");
  std::filesystem::remove(csv);
  const Run full = run({"reduce", "--mixture", mix.string(), "--M", "25", "--restarts", "1", "--csv", csv.string()});
  REQUIRE(full.code == cli::kExitOk);
  run({"reduce", "--mixture", mix.string(), "--M", "25", "--restarts", "1", "--csv", csv.string()});
  const std::string text = slurp(csv);
  CHECK(first_line(text) == "# mixred reduce csv v1");
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line == "seed,M,cost,lambda,objective,ise,wall_seconds,iterations,status");
  std::getline(lines, line);
  std::vector<std::string> fields;
  std::istringstream cells(line);
  for (std::string c; std::getline(cells, c, ',');) fields.push_back(c);
  REQUIRE(fields.size() == 9);
  CHECK(std::abs(std::stod(fields[5])) <= 1e-10);
  CHECK(fields[8] == "converged");
  std::getline(lines, line);
  CHECK(line.rfind("0,25,kl,", 0) == 0);

  const auto out = scratch("reduced.json");
  CHECK(run({"reduce", "--mixture", mix.string(), "--M", "2", "--restarts", "1", "--out", out.string()}).code == 0);
  CHECK(read_json_file(out).at("status").is_string());
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == cli::kExitValidation);
  CHECK(run({"frobnicate"}).code == cli::kExitValidation);
  CHECK(run({"reduce"}).code == cli::kExitValidation);
  CHECK(run({"reduce", "--mixture", scratch("missing.json").string()}).code == cli::kExitValidation);
  const auto bad = scratch("bad.json");
  std::ofstream(bad) << R"({"dim":1,"weights":[0.5,0.4],"components":[{"mean":[0],"cov":[[1]]},{"mean":[1],"cov":[[1]]}]})";
  const Run r = run({"reduce", "--mixture", bad.string()});
  CHECK(r.code == cli::kExitValidation);
  CHECK(r.err.find("weights sum") != std::string::npos);
  const auto mix = scratch("mix2.json");
  write_json_file(mix, to_json(simulate_mixture(2)));
  CHECK(run({"reduce", "--mixture", mix.string(), "--cost", "hellinger"}).code == cli::kExitValidation);
  CHECK(run({"reduce", "--mixture", mix.string(), "--lambda", "-1"}).code == cli::kExitValidation);
  CHECK(run({"reduce", "--mixture", mix.string(), "--M", "30"}).code == cli::kExitValidation);
  CHECK(run({"ctd", "--mixture", mix.string(), "--mixture", mix.string()}).code == cli::kExitValidation);
  CHECK(run({"surface", "--grid", "1:2"}).code == cli::kExitValidation);
  CHECK(run({"divergence", "--mixture", mix.string(), "--mixture", mix.string(), "--which", "kl"}).code ==
        cli::kExitValidation);
  CHECK(run({"bp", "--iters", "5", "--M", "2"}).code == cli::kExitNumerical);
  CHECK(run({"sweep", "--trials", "0"}).code == cli::kExitValidation);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("divergence") {
  const auto a = scratch("a.json"), b = scratch("b.json");
  write_json_file(a, to_json(simulate_mixture(3)));
  write_json_file(b, to_json(GaussianMixture(Gaussian::univariate(0.0, 1.0))));
  const Run same = run({"divergence", "--mixture", a.string(), "--mixture", a.string()});
  CHECK(same.code == 0);
  CHECK(std::abs(std::stod(same.out)) <= 1e-12);
  const auto c = scratch("c.json");
  write_json_file(c, to_json(GaussianMixture(Gaussian::univariate(1.0, 4.0))));
  const Run kl = run({"divergence", "--mixture", b.string(), "--mixture", c.string(), "--which", "kl"});
  REQUIRE(kl.code == 0);
  CHECK(std::stod(kl.out) == doctest::Approx(0.5 * (0.25 + 0.25 - 1.0 + std::log(4.0))).epsilon(1e-12));
  CHECK(run({"divergence", "--mixture", a.string(), "--mixture", b.string()}).code == cli::kExitValidation);
}

TEST_CASE("ctd") {
  const auto a = scratch("ctd_a.json"), b = scratch("ctd_b.json"), plan = scratch("plan.csv");
  write_json_file(a, to_json(simulate_mixture(10)));
  write_json_file(b, to_json(simulate_mixture(11)));
  const Run r = run({"ctd", "--mixture", a.string(), "--mixture", b.string(), "--lambda", "0.1", "--out", plan.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("value ", 0) == 0);
  const std::string text = slurp(plan);
  CHECK(first_line(text) == "# mixred ctd csv v1");
  CHECK(text.find("\nn,m,pi\n") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2 + 25 * 25);
}

TEST_CASE("surface") {
  const Run r = run({"surface", "--grid", "0.5:1.5:3,0.5:2:4"});
  REQUIRE(r.code == 0);
  CHECK(first_line(r.out) == "# mixred surface csv v1");
  CHECK(r.out.find("\nmu,sigma,gap\n") != std::string::npos);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2 + 12);
  CHECK(run({"surface", "--grid", "0.5:1.5:3,0.5:2:4"}).out == r.out);
}

TEST_CASE("bp and sweep") {
  const Run bp = run({"bp", "--trials", "1", "--seed", "3", "--iters", "2"});
  REQUIRE(bp.code == 0);
  CHECK(first_line(bp.out) == "# mixred bp csv v1");
  CHECK(bp.out.find("\ntrial,seed,iteration,node,exact_order,approx_order,ise\n") != std::string::npos);
  CHECK(std::count(bp.out.begin(), bp.out.end(), '\n') == 2 + 2 * 4);
  CHECK(bp.err.find("bp: exact") != std::string::npos);
  CHECK(run({"bp", "--trials", "1", "--seed", "3", "--iters", "2"}).out == bp.out);

  const Run sw = run({"sweep", "--trials", "2", "--M", "5", "--cost", "kl", "--cost", "w2", "--restarts", "1", "--threads", "2"});
  REQUIRE(sw.code == 0);
  CHECK(first_line(sw.out) == "# mixred sweep csv v1");
  CHECK(std::count(sw.out.begin(), sw.out.end(), '\n') == 2 + 4);
  CHECK(sw.out.find("\n0,5,kl,") != std::string::npos);
}
