#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "nelson/io.hpp"
#include "nelson/runner.hpp"

using namespace nelson;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nelson_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig small_config(double lambda, const fs::path& out) {
    RunConfig c;
    c.model.lambda = lambda;
    c.model.sigma = 0.5;
    c.grid = {1, 2, 2};
    c.basis.maxPhotons = 1;
    c.model.nScales = 2;
    c.lambdas = {lambda};
    c.outDir = out.string();
    return c;
}

int run(const std::string& cmd, const RunConfig& c) {
    std::ostringstream log;
    return run_command(cmd, c, log);
}

std::string first_line(const fs::path& p) {
    const std::string s = read_text_file(p);
    return s.substr(0, s.find('\n'));
}

// NELSON_UPDATE_GOLDEN=1 rewrites the golden copy instead of comparing.
void check_golden(const fs::path& produced, const std::string& golden) {
    const fs::path g = fs::path(NELSON_GOLDEN_DIR) / golden;
    const std::string text = read_text_file(produced);
    if (const char* u = std::getenv("NELSON_UPDATE_GOLDEN"); u && std::string(u) == "1") {
        fs::create_directories(g.parent_path());
        write_text_file(g.parent_path(), g.filename().string(), text);
        return;
    }
    REQUIRE(fs::exists(g));
    INFO(golden);
    CHECK(text == read_text_file(g));
}

void check_same_tree(const fs::path& a, const fs::path& b) {
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        const fs::path other = b / fs::relative(e.path(), a);
        INFO(other.string());
        REQUIRE(fs::exists(other));
        CHECK(read_text_file(e.path()) == read_text_file(other));
        ++files;
    }
    CHECK(files > 0);
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("zero-coupling ground state through the runner") {
        const auto out = scratch("gs0");
        auto c = small_config(0.0, out);
        REQUIRE(run("ground-state", c) == 0);
        const auto m = read_manifest(out / "ground-state");
        CHECK(m["status"] == "complete");
        CHECK(std::abs(m["results"]["E"].get<double>() - 0.5 * c.model.P.squaredNorm()) <= 1e-15);
        check_golden(out / "ground-state" / "grid.csv", "grid.csv");
        check_golden(out / "ground-state" / "psi.csv", "psi.csv");
    }

    TEST_CASE("manifest lists every output with its hash") {
        const auto out = scratch("manifest");
        const auto c = small_config(0.1, out);
        REQUIRE(run("ground-state", c) == 0);
        const auto m = read_manifest(out / "ground-state");
        for (const char* key : {"tool", "version", "command", "status", "config", "config_ini", "config_fingerprint", "seed",
                                "conventions", "hashes", "timings_seconds", "warnings", "results", "files"})
            CHECK_MESSAGE(m.contains(key), key);
        CHECK(m["config_fingerprint"] == config_fingerprint(c));
        for (const auto& f : m["files"]) {
            const std::string text = read_text_file(out / "ground-state" / f["path"].get<std::string>());
            Fnv1a h;
            h.add_bytes(text.data(), text.size());
            CHECK(f["bytes"].get<std::size_t>() == text.size());
            CHECK(f["fnv1a"] == hex64(h.value()));
        }
    }

    TEST_CASE("reruns are byte-identical apart from the manifest") {
        const auto a = scratch("rerun_a"), b = scratch("rerun_b");
        for (const char* cmd : {"ground-state", "derivatives", "wavefunctions"}) {
            REQUIRE(run(cmd, small_config(0.1, a)) == 0);
            REQUIRE(run(cmd, small_config(0.1, b)) == 0);
        }
        check_same_tree(a, b);
    }

    TEST_CASE("output schemas") {
        const auto out = scratch("schemas");
        const auto c = small_config(0.1, out);
        REQUIRE(run("derivatives", c) == 0);
        REQUIRE(run("wavefunctions", c) == 0);
        CHECK(first_line(out / "derivatives" / "fd_checks.csv") == "quantity,analytic,h,finite_difference,error,observed_order");
        CHECK(first_line(out / "derivatives" / "psi_derivatives.csv") == "index,d0,d1,d2");
        CHECK(first_line(out / "wavefunctions" / "wavefunctions.csv") == "q,k1x,k1y,k1z,k2x,k2y,k2z,value,route,derivative");
        CHECK(first_line(out / "wavefunctions" / "cancellation.csv") == "k,t1,t2,t3,sum,largest,ratio,full");
    }

    TEST_CASE("zero-coupling sweep ledger") {
        const auto out = scratch("sweep0");
        const auto c = small_config(0.0, out);
        REQUIRE(run("sweep", c) == 0);
        check_golden(out / "sweep" / "ledger_lambda_0.csv", "ledger_lambda_0.csv");
        CHECK(fs::exists(out / "sweep" / "summary.json"));
        CHECK(read_manifest(out / "sweep")["status"] == "complete");
    }

    TEST_CASE("interrupted sweep resumes to the fresh result") {
        const auto fresh = scratch("sweep_fresh"), cut = scratch("sweep_cut");
        auto c = small_config(0.1, fresh);
        REQUIRE(run("sweep", c) == 0);
        c.outDir = cut.string();
        c.stopAfter = 2;
        CHECK(run("sweep", c) == 3);
        CHECK(read_manifest(cut / "sweep")["status"] == "interrupted");
        c.stopAfter = -1;
        CHECK(run("sweep", c) == 0);
        check_same_tree(fresh, cut);
    }

    TEST_CASE("corrupted coupling makes verify fail") {
        const auto out = scratch("verify_bad");
        auto c = small_config(0.1, out);
        c.corruptWeight = true;
        CHECK(run("verify", c) == 1);
        CHECK(read_manifest(out / "verify")["status"] == "checks_failed");
        CHECK(first_line(out / "verify" / "verify.csv") == "check,value,threshold,relation,pass,detail");
        const std::string csv = read_text_file(out / "verify" / "verify.csv");
        CHECK(csv.find("dual_route_hw,") != std::string::npos);
        CHECK(csv.find("false") != std::string::npos);
    }

    TEST_CASE("unknown command is an error") {
        const auto out = scratch("unknown");
        CHECK_THROWS_AS(run("bogus", small_config(0.1, out)), Error);
    }
}
