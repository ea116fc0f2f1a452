#include <doctest.h>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// End-to-end tests of the command-line tool: exit codes, report shape, CSV
// output, determinism. FLOQ_BIN and FLOQ_FIXTURES_DIR come from the build.

namespace {

namespace fs = std::filesystem;

const std::string kBin = FLOQ_BIN;
const std::string kFixtures = FLOQ_FIXTURES_DIR;

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = kBin + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    RunResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.out.append(buf.data(), got);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string fixture(const std::string& name) { return (fs::path(kFixtures) / name).string(); }

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / "floq_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string strip_timings(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.find("timings_ms") == std::string::npos && line.find("\"total\"") == std::string::npos)
            out << line << "\n";
    return out.str();
}

}  // namespace

TEST_CASE("analyze") {
    SUBCASE("constant diag(1,2): multipliers {e, e^2}, form exists") {
        const auto res = run("analyze " + fixture("sys_constant_diag12.json"));
        CHECK(res.exit_code == 0);
        const auto rep = nlohmann::json::parse(res.out);
        CHECK(rep["a_index"].get<int>() == 0);
        CHECK(rep["real_T_periodic_form"]["exists"].get<bool>());
        CHECK(rep["multipliers"][0]["re"].get<double>() == doctest::Approx(std::exp(2.0)).epsilon(1e-8));
        CHECK(rep["multipliers"][1]["re"].get<double>() == doctest::Approx(std::exp(1.0)).epsilon(1e-8));
        CHECK(rep["period_validation"]["pass"].get<bool>());
    }
    SUBCASE("manufactured d = 2: no real T-periodic form") {
        const auto res = run("analyze " + fixture("sys_manufactured_d2.json"));
        CHECK(res.exit_code == 0);
        const auto rep = nlohmann::json::parse(res.out);
        CHECK(rep["a_index"].get<int>() == 2);
        CHECK_FALSE(rep["real_T_periodic_form"]["exists"].get<bool>());
    }
    SUBCASE("nonfinite entry exits 2") {
        const auto dir = temp_dir();
        const auto bad = dir / "bad_nan.json";
        std::ofstream(bad) << R"({"n":2,"T":1.0,"kind":"trig","A0":[[0.0,1e999],[0.0,0.0]]})";
        const auto res = run("analyze " + bad.string());
        CHECK(res.exit_code == 2);
    }
    SUBCASE("shape errors exit 2 naming the offending path") {
        const auto dir = temp_dir();
        const auto bad = dir / "bad_shape_path.json";
        std::ofstream(bad) << R"({"n":2,"T":1.0,"kind":"trig","A0":[[0.0,1.0],[0.0]]})";
        const std::string cmd = kBin + " analyze " + bad.string() + " 2>" + (dir / "err.txt").string();
        const int status = std::system((cmd + " >/dev/null").c_str());
        CHECK(WEXITSTATUS(status) == 2);
        std::ifstream err(dir / "err.txt");
        std::stringstream ss;
        ss << err.rdbuf();
        CHECK(ss.str().find("/A0") != std::string::npos);
    }
    SUBCASE("reports are deterministic modulo timings") {
        const auto a = run("analyze " + fixture("sys_trig_2x2.json"));
        const auto b = run("analyze " + fixture("sys_trig_2x2.json"));
        CHECK(strip_timings(a.out) == strip_timings(b.out));
        CHECK_FALSE(strip_timings(a.out).empty());
    }
}

TEST_CASE("normal-form") {
    const auto dir = temp_dir();
    const auto rep_path = dir / "nf.json";
    const auto csv_path = dir / "nf.csv";
    SUBCASE("manufactured fixture writes a verified report and Q samples") {
        const auto res = run("normal-form " + fixture("sys_manufactured_d2.json") + " --out " +
                             rep_path.string() + " --csv " + csv_path.string() + " --grid 128");
        CHECK(res.exit_code == 0);
        const auto rep = nlohmann::json::parse(std::ifstream(rep_path));
        CHECK(rep["d"].get<int>() == 2);
        CHECK(rep["verification"]["antiperiodicity"]["pass"].get<bool>());
        CHECK(rep["verification"]["fundamental_residual_128"].get<double>() <= 1e-6);

        std::ifstream csv(csv_path);
        int lines = 0;
        std::string line, header;
        while (std::getline(csv, line)) {
            if (lines == 0) header = line;
            ++lines;
        }
        CHECK(lines == 130);  // header + 129 sample rows
        CHECK(header == "t,Q11,Q12,Q21,Q22");
    }
    SUBCASE("zero system: R = 0 and Q rows are the identity") {
        const auto res = run("normal-form " + fixture("sys_zero2.json"));
        CHECK(res.exit_code == 0);
        const auto rep = nlohmann::json::parse(res.out);
        CHECK(rep["d"].get<int>() == 0);
        for (const auto& row : rep["R"])
            for (const auto& v : row) CHECK(std::abs(v.get<double>()) <= 1e-12);
    }
    SUBCASE("corrupted file exits 2") {
        const auto bad = dir / "bad_shape.json";
        std::ofstream(bad) << R"({"n":2,"T":1.0,"kind":"trig","A0":[[0.0,1.0,3.0],[0.0,0.0,1.0]]})";
        const auto res = run("normal-form " + bad.string());
        CHECK(res.exit_code == 2);
    }
}

TEST_CASE("orbit-frame") {
    const auto dir = temp_dir();
    SUBCASE("planar cycle report") {
        const auto rep_path = dir / "frame.json";
        const auto traj_path = dir / "traj.csv";
        const auto res = run("orbit-frame " + fixture("field_planar_cycle.json") + " --out " +
                             rep_path.string() + " --traj-csv " + traj_path.string());
        CHECK(res.exit_code == 0);
        const auto rep = nlohmann::json::parse(std::ifstream(rep_path));
        CHECK(rep["d"].get<int>() == 0);
        CHECK(rep["q0"].get<int>() == 0);
        CHECK(rep["H1"][0][0].get<double>() == doctest::Approx(-2.0).epsilon(1e-4));
        CHECK(rep["all_properties_pass"].get<bool>());
        CHECK(rep["period"].get<double>() == doctest::Approx(2 * M_PI).epsilon(1e-9));

        std::ifstream csv(traj_path);
        std::string header;
        std::getline(csv, header);
        CHECK(header == "t,s,v1,z1,z2");
    }
    SUBCASE("perturbed run exercises the C bound") {
        const auto res =
            run("orbit-frame " + fixture("field_planar_cycle.json") + " --with-perturbation");
        CHECK(res.exit_code == 0);
        const auto rep = nlohmann::json::parse(res.out);
        CHECK(rep["C_estimate"]["value"].get<double>() > 0.0);
    }
    SUBCASE("twisted cycle: d = 2 with passing sign flips") {
        const auto res = run("orbit-frame " + fixture("field_twisted_cycle.json"));
        CHECK(res.exit_code == 0);
        const auto rep = nlohmann::json::parse(res.out);
        CHECK(rep["d"].get<int>() == 2);
        CHECK(rep["q0"].get<int>() == 0);
        CHECK(rep["all_properties_pass"].get<bool>());
        CHECK(rep["frame_diagnostics"]["u_antiperiodicity"].get<double>() <= 1e-6);
    }
    SUBCASE("missing guess exits 2") {
        const auto field = dir / "poly_no_seed.json";
        std::ofstream(field) << R"({"n":2,"components":[[{"c":1.0,"e":[0,1]}],[{"c":-1.0,"e":[1,0]}]]})";
        const auto res = run("orbit-frame " + field.string());
        CHECK(res.exit_code == 2);
    }
    SUBCASE("a hopeless period guess exits 4") {
        const auto res = run("orbit-frame " + fixture("field_planar_cycle.json") + " --T0 1.0");
        CHECK(res.exit_code == 4);
    }
}

TEST_CASE("verify") {
    SUBCASE("shipped fixtures pass") {
        const auto res = run("verify " + kFixtures);
        CHECK(res.exit_code == 0);
        const auto rep = nlohmann::json::parse(res.out);
        CHECK(rep["all_pass"].get<bool>());
        CHECK(rep["criteria"].size() == 10);
    }
    SUBCASE("empty directory exits 2") {
        const auto dir = temp_dir() / "empty";
        fs::create_directories(dir);
        const auto res = run("verify " + dir.string());
        CHECK(res.exit_code == 2);
    }
    SUBCASE("a perturbed expected value exits 1 naming the fixture") {
        const auto dir = temp_dir() / "tampered";
        fs::create_directories(dir);
        for (const auto& entry : fs::directory_iterator(kFixtures))
            fs::copy_file(entry.path(), dir / entry.path().filename(),
                          fs::copy_options::overwrite_existing);
        auto j = nlohmann::json::parse(std::ifstream(dir / "sys_zero2.json"));
        j["expected"]["a_index"] = 1;
        std::ofstream(dir / "sys_zero2.json") << j.dump(2);
        const auto res = run("verify " + dir.string());
        CHECK(res.exit_code == 1);
        const auto rep = nlohmann::json::parse(res.out);
        CHECK_FALSE(rep["all_pass"].get<bool>());
        bool named = false;
        for (const auto& f : rep["fixture_failures"])
            named = named || f.get<std::string>().find("sys_zero2") != std::string::npos;
        CHECK(named);
    }
}

TEST_CASE("environment tolerance override") {
    SUBCASE("bad FLOQ_TOL exits 2") {
        const std::string cmd = "FLOQ_TOL=banana " + kBin + " analyze " +
                                fixture("sys_zero2.json") + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        CHECK(WEXITSTATUS(status) == 2);
    }
    SUBCASE("valid FLOQ_TOL is honored") {
        const std::string cmd = "FLOQ_TOL=1e-9 " + kBin + " analyze " + fixture("sys_zero2.json") +
                                " > /tmp/floq_tol_test.json 2>/dev/null";
        const int status = std::system(cmd.c_str());
        CHECK(WEXITSTATUS(status) == 0);
        const auto rep = nlohmann::json::parse(std::ifstream("/tmp/floq_tol_test.json"));
        CHECK(rep["integration"]["tol"].get<double>() == 1e-9);
    }
}
