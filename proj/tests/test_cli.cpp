#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <sys/wait.h>

// GMRA_CLI_PATH is injected by the build: the full path to the gmra_cli
// binary under test.

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << body;
}

bool exists(const std::string& path) {
  std::ifstream in(path);
  return in.good();
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(GMRA_CLI_PATH) + " " + args +
                          " >cli_stdout.tmp 2>cli_stderr.tmp";
  const int raw = std::system(cmd.c_str());
  CliResult result;
  result.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = read_file("cli_stdout.tmp");
  result.err = read_file("cli_stderr.tmp");
  std::remove("cli_stdout.tmp");
  std::remove("cli_stderr.tmp");
  return result;
}

}  // namespace

TEST_CASE("fit, stream, eval, compare pipeline") {
  auto fit = run_cli("fit --n0 120 --seed 3 -o cli_ck.json");
  CHECK(fit.code == 0);
  CHECK(fit.out.rfind("fit: train=120", 0) == 0);
  REQUIRE(exists("cli_ck.json"));

  auto stream = run_cli(
      "stream --n0 120 --stream 150 --seed 3 --in cli_ck.json -o cli_ck2.json");
  CHECK(stream.code == 0);
  CHECK(stream.out.find("ingested=150") != std::string::npos);
  REQUIRE(exists("cli_ck2.json"));

  auto eval = run_cli("eval --in cli_ck2.json --format csv");
  CHECK(eval.code == 0);
  CHECK(eval.out.rfind("metric,value\npoints,270\n", 0) == 0);
  CHECK(eval.out.find("global_mse,") != std::string::npos);

  auto eval_json = run_cli("eval --in cli_ck2.json --format json -o cli_eval.json");
  CHECK(eval_json.code == 0);
  CHECK(read_file("cli_eval.json").find("\"global_mse\"") != std::string::npos);

  // a freshly streamed tree matches its own batch rebuild near machine
  // precision, so the reported rmse must be tiny
  auto compare = run_cli("compare --in cli_ck2.json -o cli_compare.csv");
  CHECK(compare.code == 0);
  CHECK(compare.out.rfind("compare: rmse=", 0) == 0);
  const double rmse = std::stod(compare.out.substr(14));
  CHECK(rmse <= 1e-8);
  CHECK(read_file("cli_compare.csv")
            .rfind("scale,node,count_stream,count_batch,max_angle\n", 0) == 0);

  for (const char* f : {"cli_ck.json", "cli_ck2.json", "cli_eval.json",
                        "cli_compare.csv"})
    std::remove(f);
}

TEST_CASE("experiment runs from a config file and reproduces byte-for-byte") {
  write_file("cli_exp.cfg",
             "dataset = swissroll\n"
             "n0 = 100\n"
             "stream = 120\n"
             "repeats = 2\n"
             "seed = 21\n");
  auto first = run_cli("experiment --config cli_exp.cfg -o cli_run_a");
  CHECK(first.code == 0);
  CHECK(first.out.rfind("experiment: repeats=2", 0) == 0);
  auto second = run_cli("experiment --config cli_exp.cfg -o cli_run_b");
  CHECK(second.code == 0);

  CHECK(read_file("cli_run_a_summary.csv") == read_file("cli_run_b_summary.csv"));
  CHECK(read_file("cli_run_a_repeat0.csv") == read_file("cli_run_b_repeat0.csv"));
  CHECK(read_file("cli_run_a_repeat1.csv") == read_file("cli_run_b_repeat1.csv"));
  CHECK(read_file("cli_run_a_mse.svg") == read_file("cli_run_b_mse.svg"));

  // a flag override must change the output
  auto third = run_cli("experiment --config cli_exp.cfg --seed 22 -o cli_run_c");
  CHECK(third.code == 0);
  CHECK(read_file("cli_run_a_summary.csv") != read_file("cli_run_c_summary.csv"));

  std::remove("cli_exp.cfg");
  for (const char* prefix : {"cli_run_a", "cli_run_b", "cli_run_c"})
    for (const char* suffix : {"_summary.csv", "_repeat0.csv", "_repeat1.csv",
                               "_mse.svg", "_leaves.svg", "_depth.svg",
                               "_cellsize.svg"})
      std::remove((std::string(prefix) + suffix).c_str());
}

TEST_CASE("bounds subcommand reports all suites holding") {
  auto result = run_cli("bounds --count 40 --seed 11");
  CHECK(result.code == 0);
  REQUIRE(result.out.rfind("suite,probes,applicable,held,stat\n", 0) == 0);
  CHECK(result.out.find("\ngap,40,40,40,") != std::string::npos);
  CHECK(result.out.find("\nangle,40,") != std::string::npos);
  CHECK(result.out.find("\nscaling,") != std::string::npos);
}

TEST_CASE("errors exit nonzero with a single error line") {
  auto missing = run_cli("eval --in no_such_checkpoint.json");
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("error: ", 0) == 0);
  CHECK(std::count(missing.err.begin(), missing.err.end(), '\n') == 1);

  auto bad_value = run_cli("fit --epsilon -2");
  CHECK(bad_value.code == 1);
  CHECK(bad_value.err.rfind("error: ", 0) == 0);

  auto bad_dataset = run_cli("fit --dataset mystery");
  CHECK(bad_dataset.code == 1);
  CHECK(bad_dataset.err.rfind("error: ", 0) == 0);

  auto bad_flag = run_cli("fit --frobnicate 3");
  CHECK(bad_flag.code == 1);
  CHECK(bad_flag.err.rfind("error: ", 0) == 0);

  auto no_sub = run_cli("");
  CHECK(no_sub.code == 1);
}
