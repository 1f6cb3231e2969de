// End-to-end checks of the command-line tool. Run as: cli_tests <path-to-cvqkd>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "cvqkd/csv.hpp"
#include "cvqkd/protocol.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++g_failures;
    std::cerr << "FAILED: " << what << "\n";
  }
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run(const std::string& cli, const std::string& args, const fs::path& dir) {
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string cmd =
      "'" + cli + "' " + args + " > '" + out_file.string() + "' 2> '" + err_file.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string token_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  if (pos == std::string::npos) return {};
  const auto start = pos + key.size();
  auto end = start;
  while (end < text.size() && text[end] != ' ' && text[end] != '\n') ++end;
  return text.substr(start, end - start);
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << body;
}

long count_lines(const std::string& s) {
  long n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_tests <path-to-cvqkd-binary>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path dir = "cli_test_tmp";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // keyrate is a thin shell: printed numbers equal direct library calls
  {
    const RunResult r = run(cli, "keyrate --distance-km 30 --gain 3", dir);
    check(r.exit_code == 0, "keyrate exits 0");
    const auto kr = cvqkd::secret_key_rate(cvqkd::ChannelParams::from_length(30.0, 0.2, 0.01),
                                           {0.6, 0.9}, {40.0, 0.956, 3.0});
    check(token_after(r.out, "R=") == cvqkd::format_value(kr.rate), "keyrate R matches library");
    check(token_after(r.out, "I_AB=") == cvqkd::format_value(kr.i_ab),
          "keyrate I_AB matches library");
    check(token_after(r.out, "chi_BE=") == cvqkd::format_value(kr.chi_be),
          "keyrate chi_BE matches library");
    check(token_after(r.out, "lambda5=") == cvqkd::format_value(kr.lambdas[4]),
          "keyrate lambda5 matches library");
  }

  // beta = 0 prints R = -chi_BE and still exits 0
  {
    const RunResult r = run(cli, "keyrate --beta 0", dir);
    check(r.exit_code == 0, "keyrate beta=0 exits 0");
    const std::string rate = token_after(r.out, "R=");
    const std::string chi = token_after(r.out, "chi_BE=");
    check(!rate.empty() && rate == "-" + chi, "beta=0 prints R = -chi_BE");
  }

  // clamp is presentation only
  {
    const RunResult raw = run(cli, "keyrate --distance-km 100", dir);
    const RunResult clamped = run(cli, "keyrate --distance-km 100 --clamp", dir);
    check(token_after(raw.out, "R=").rfind("-", 0) == 0, "rate at 100 km is negative unclamped");
    check(token_after(clamped.out, "R=") == "0", "clamped rate prints as 0");
  }

  // malformed config: exit 2, no partial output
  {
    const fs::path bad = dir / "bad.json";
    write_file(bad, "{ this is not json");
    const fs::path out_csv = dir / "never.csv";
    const RunResult r = run(cli,
                            "sweep-distance --config '" + bad.string() + "' --out '" +
                                out_csv.string() + "'",
                            dir);
    check(r.exit_code == 2, "malformed config exits 2");
    check(!fs::exists(out_csv), "no output file on config error");
    check(!fs::exists(out_csv.string() + ".tmp"), "no temporary left behind");
  }

  // unknown keys are rejected
  {
    const fs::path cfg = dir / "unknown.json";
    write_file(cfg, R"({"channel": {"bogus_key": 1.0}})");
    const RunResult r = run(cli, "keyrate --config '" + cfg.string() + "'", dir);
    check(r.exit_code == 2, "unknown config key exits 2");
    check(r.err.find("bogus_key") != std::string::npos, "unknown key named in the error");
  }

  // out-of-range values are listed field by field
  {
    const fs::path cfg = dir / "ranges.json";
    write_file(cfg, R"({"detector": {"eta_d": 1.5}, "protocol": {"beta": -0.2}})");
    const RunResult r = run(cli, "keyrate --config '" + cfg.string() + "'", dir);
    check(r.exit_code == 2, "out-of-range config exits 2");
    check(r.err.find("eta_d") != std::string::npos && r.err.find("beta") != std::string::npos,
          "both violations reported");
  }

  // sweep output: row count, determinism, schema
  {
    const fs::path cfg = dir / "sweep.json";
    write_file(cfg, R"({
      "sweep": {"distance_min_km": 0, "distance_max_km": 10, "distance_step_km": 1,
                "gains": [1], "include_ideal": false}
    })");
    const fs::path csv_a = dir / "a.csv";
    const fs::path csv_b = dir / "b.csv";
    const std::string base =
        "sweep-distance --config '" + cfg.string() + "' --out '";
    const RunResult ra = run(cli, base + csv_a.string() + "'", dir);
    const RunResult rb = run(cli, base + csv_b.string() + "'", dir);
    check(ra.exit_code == 0 && rb.exit_code == 0, "sweep-distance exits 0");
    const std::string body_a = slurp(csv_a);
    check(body_a == slurp(csv_b), "sweep CSV is byte-identical across runs");
    check(count_lines(body_a) == 1 + 11, "one series over 11 grid points: 11 data rows");
    check(body_a.rfind("axis,series_label,key_rate_bits_per_pulse,i_ab,chi_be,status,reason\n",
                       0) == 0,
          "sweep CSV header");
  }

  // sweep without an output path is a config error
  {
    const RunResult r = run(cli, "sweep-distance", dir);
    check(r.exit_code == 2, "missing output path exits 2");
  }

  // sweep-variance over a small grid
  {
    const fs::path cfg = dir / "variance.json";
    write_file(cfg, R"({
      "sweep": {"va_min": 5, "va_max": 25, "va_step": 5,
                "gains": [1, 10], "include_ideal": false, "va_distances_km": [30]}
    })");
    const fs::path out_csv = dir / "variance.csv";
    const RunResult r = run(
        cli, "sweep-variance --config '" + cfg.string() + "' --out '" + out_csv.string() + "'",
        dir);
    check(r.exit_code == 0, "sweep-variance exits 0");
    check(count_lines(slurp(out_csv)) == 1 + 2 * 5, "two series over five V_A points");
  }

  // max-noise: roots for healthy parameters, reasons for hopeless ones
  {
    const fs::path cfg = dir / "noise.json";
    write_file(cfg, R"({
      "sweep": {"max_noise_min_km": 20, "max_noise_max_km": 30, "max_noise_step_km": 10,
                "gains": [1], "include_ideal": false}
    })");
    const fs::path out_csv = dir / "noise.csv";
    const RunResult r = run(
        cli, "max-noise --config '" + cfg.string() + "' --out '" + out_csv.string() + "'", dir);
    check(r.exit_code == 0, "max-noise exits 0");
    const std::string body = slurp(out_csv);
    check(count_lines(body) == 1 + 2, "two max-noise rows");
    check(body.find(",ok,") != std::string::npos, "max-noise rows solved");

    const RunResult hopeless = run(cli,
                                   "max-noise --config '" + cfg.string() + "' --beta 0.01 --out '" +
                                       out_csv.string() + "'",
                                   dir);
    check(hopeless.exit_code == 0, "per-length failures are not fatal");
    check(slurp(out_csv).find("no positive rate") != std::string::npos,
          "failure reason recorded in CSV");
  }

  // mc-verify: deterministic report, pass exit code
  {
    const fs::path cfg = dir / "mc.json";
    write_file(cfg, R"({"mc": {"samples": 100000}, "seed": 2718})");
    const RunResult r1 = run(cli, "mc-verify --config '" + cfg.string() + "'", dir);
    const std::string first = r1.out;
    const RunResult r2 = run(cli, "mc-verify --config '" + cfg.string() + "'", dir);
    check(r1.exit_code == 0, "mc-verify passes");
    check(first.find("result: PASS") != std::string::npos, "mc-verify reports PASS");
    check(first == r2.out, "mc-verify report is byte-identical across runs");
  }

  // an absurdly tight threshold turns the same run into a statistical fail
  {
    const fs::path cfg = dir / "mc_tight.json";
    write_file(cfg, R"({"mc": {"samples": 50000, "z_threshold": 0.001}})");
    const RunResult r = run(cli, "mc-verify --config '" + cfg.string() + "'", dir);
    check(r.exit_code == 1, "statistical fail exits 1");
    check(r.out.find("result: FAIL") != std::string::npos, "mc-verify reports FAIL");
  }

  if (g_failures == 0) {
    std::cout << "cli_tests: all checks passed\n";
    return 0;
  }
  std::cout << "cli_tests: " << g_failures << " check(s) failed\n";
  return 1;
}
