#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch()
{
    const auto dir = fs::temp_directory_path() / "gonora_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Run gonora(const std::string& args, const std::string& env = "")
{
    const auto dir = scratch();
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = env + " '" GONORA_CLI_PATH "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string tiny_config()
{
    const auto path = scratch() / "tiny.cfg";
    std::ofstream(path) << "# eight RUs, eight devices\n"
                           "prp.omega = 8\nprp.beta = 128\nprp.ru_payload_bits = 16\ntraffic.m_count = 8\n"
                           "sim.horizon = 50\nsim.replications = 2\n";
    return path.string();
}

} // namespace

TEST_CASE("cli: missing --config exits 2 with a message on stderr")
{
    const auto r = gonora("--sweep overload_factor=1");
    CHECK(r.code == 2);
    CHECK(r.err.find("--config") != std::string::npos);
}

TEST_CASE("cli: unknown flag exits 2")
{
    const auto r = gonora("--config " + tiny_config() + " --frobnicate");
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("cli: malformed --report input exits 2")
{
    const auto bad = scratch() / "bad.csv";
    std::ofstream(bad) << "not,a,result,table\n";
    const auto r = gonora("--report " + bad.string());
    CHECK(r.code == 2);
    CHECK(gonora("--report " + (scratch() / "missing.csv").string()).code == 2);
}

TEST_CASE("cli: a simulation run writes the CSV and a report")
{
    const auto dir = scratch() / "outdir";
    fs::remove_all(dir);
    const auto r = gonora("--config " + tiny_config() + " --sweep overload_factor=0.5,1 --output sim.csv",
                          "GONORA_OUTPUT_DIR='" + dir.string() + "'");
    CHECK(r.code == 0);
    const auto csv = slurp(dir / "sim.csv");
    CHECK(csv.rfind("scenario_id,overload_factor,rrh_count,p,attempts,", 0) == 0);
    CHECK(csv.find("analytic_bler") == std::string::npos);
    CHECK(r.out.find("2 sweep point(s)") != std::string::npos);

    const auto again = gonora("--report " + (dir / "sim.csv").string());
    CHECK(again.code == 0);
    CHECK(again.out.find("curve rrh_count=") != std::string::npos);
}

TEST_CASE("cli: compare mode adds analytic columns")
{
    const auto out = scratch() / "compare.csv";
    const auto r = gonora("--config " + tiny_config() + " --mode compare --output " + out.string());
    CHECK(r.code == 0);
    const auto csv = slurp(out);
    CHECK(csv.find(",seed,analytic_bler,analytic_throughput,analytic_drop_rate\n") != std::string::npos);
    CHECK(r.out.find("delta") != std::string::npos);
}

TEST_CASE("cli: --help exits 0")
{
    const auto r = gonora("--help");
    CHECK(r.code == 0);
    CHECK(r.out.find("--sweep") != std::string::npos);
}
