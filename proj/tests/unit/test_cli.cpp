#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <doctest.h>

namespace fs = std::filesystem;

namespace {

const fs::path kCli = UFPL_CLI_PATH;
const fs::path kData = UFPL_TEST_DATA_DIR;

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ufpl-test-cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with stdout and stderr captured under `dir`; returns the exit code.
int cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  auto cmd = env + " '" + kCli.string() + "' " + args + " >'" +
             (dir / "stdout.txt").string() + "' 2>'" + (dir / "stderr.txt").string() + "'";
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("run: passing config exits 0 and honours --out") {
  auto dir = scratch("run");
  CHECK(cli("--out '" + dir.string() + "' run '" + (kData / "kv_ftl.cfg").string() + "'",
            dir) == 0);
  CHECK(fs::exists(dir / "ufpl-out" / "summary.json"));
}

TEST_CASE("run: the environment variable sets the root, --out overrides it") {
  auto dir = scratch("env");
  auto env = "UFPL_OUTPUT_ROOT='" + (dir / "from-env").string() + "'";
  CHECK(cli("run '" + (kData / "kv_ftl.cfg").string() + "'", dir, env) == 0);
  CHECK(fs::exists(dir / "from-env" / "ufpl-out" / "summary.json"));
  CHECK(cli("--out '" + (dir / "from-cli").string() + "' run '" +
                (kData / "kv_ftl.cfg").string() + "'",
            dir, env) == 0);
  CHECK(fs::exists(dir / "from-cli" / "ufpl-out" / "summary.json"));
}

TEST_CASE("run: config error exits 1 with line and field") {
  auto dir = scratch("bad");
  CHECK(cli("--out '" + dir.string() + "' run '" + (kData / "bad_mu.cfg").string() + "'",
            dir) == 1);
  CHECK(slurp(dir / "stderr.txt").find("config line 2 (mu)") != std::string::npos);
}

TEST_CASE("run: violation exits 2") {
  auto dir = scratch("violation");
  CHECK(cli("--out '" + dir.string() + "' run '" + (kData / "short_spike.cfg").string() +
                "'",
            dir) == 2);
}

TEST_CASE("usage errors exit 1") {
  auto dir = scratch("usage");
  CHECK(cli("", dir) == 1);
  CHECK(cli("frobnicate", dir) == 1);
  CHECK(cli("run '" + (dir / "missing.cfg").string() + "'", dir) == 1);
  CHECK(cli("fbm steps=10", dir) == 1);
  CHECK(cli("--help", dir) == 0);
}

TEST_CASE("check: re-verifies written traces") {
  auto dir = scratch("check");
  REQUIRE(cli("--out '" + dir.string() + "' run '" + (kData / "short_spike.cfg").string() +
                  "'",
              dir) == 2);
  auto trace = dir / "ufpl-out" / "file-short_spike" / "trace.csv";
  CHECK(cli("check '" + trace.string() + "'", dir) == 2);
  CHECK(slurp(dir / "stdout.txt").find("\"thm2-lowdev\"") != std::string::npos);
  // Without the deviation parameter only the unconditional bounds apply.
  fs::remove(trace.parent_path() / "meta.json");
  CHECK(cli("check '" + trace.string() + "' --mu 0.618", dir) == 0);
  CHECK(cli("check '" + trace.string() + "'", dir) == 1);
}

TEST_CASE("fbm: writes a price path under the output root") {
  auto dir = scratch("fbm");
  auto env = "UFPL_OUTPUT_ROOT='" + dir.string() + "'";
  CHECK(cli("fbm hurst=0.75 steps=64 seed=4 --file paths/p.csv", dir, env) == 0);
  auto csv = slurp(dir / "paths" / "p.csv");
  CHECK(csv.rfind("t,price\n0,100\n", 0) == 0);
  CHECK(cli("fbm hurst=0.75 steps=64 seed=4 --file q.csv", dir, env) == 0);
  CHECK(slurp(dir / "q.csv") == csv);
}
