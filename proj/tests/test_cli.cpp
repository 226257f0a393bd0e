#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TDLAB_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "tdlab_cli_test";
    fs::create_directories(dir);
    const std::string cfg = (dir / "ok.cfg").string();
    CHECK(run_cli("gen-config --preset baird-fig3 -o \"" + cfg + "\"") == 0);
    CHECK(run_cli("run \"" + cfg + "\" --set T=50 --set n_trials=2 --set checkpoints=log:5 --set \"output=" +
                  (dir / "ok").string() + "\"") == 0);
    CHECK(fs::exists(dir / "ok_summary.csv"));
    CHECK(run_cli("rate \"" + (dir / "ok_summary.csv").string() + "\" --window 1:50") == 0);
    CHECK(run_cli("solve minimax") == 0);

    CHECK(run_cli("gen-config --preset nope") == 2);
    CHECK(run_cli("run \"" + cfg + "\" --set bogus=1") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("solve minimax --d 4") == 2);
    CHECK(run_cli("run \"" + cfg + "\" --set algorithm=td --set stepsize.mode=fixed --set T=10") == 3);
    CHECK(run_cli("run /nonexistent/x.cfg") == 4);
    CHECK(run_cli("run \"" + cfg + "\" --set T=10 --set output=/nonexistent/dir/x") == 4);
    fs::remove_all(dir);
  }
}
