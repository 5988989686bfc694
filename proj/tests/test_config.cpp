#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nelson/config.hpp"

using namespace nelson;

namespace {

std::string error_of(const std::string& ini) {
    std::istringstream is(ini);
    try {
        parse_config(is);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("defaults < file < flags") {
        std::istringstream is("[model]\nlambda = 0.2\nsigma = 0.3\nalpha_bar = 0.25\n[sweep]\nscales = 3\n");
        ConfigOverrides ov;
        ov.sigma = 0.125;
        ov.qMax = 3;
        const auto c = parse_config(is, ov);
        CHECK(c.model.lambda == 0.2);
        CHECK(c.model.alphaBar == 0.25);
        CHECK(c.model.sigma == 0.125);
        CHECK(c.model.nScales == 3);
        CHECK(c.basis.maxPhotons == 3);
        CHECK(c.model.kappa == RunConfig{}.model.kappa);
    }

    TEST_CASE("--lambda replaces the sweep coupling list") {
        std::istringstream is("[model]\nlambda = 0.2\nsigma = 0.3\n[sweep]\nlambdas = 0.01, 0.02\n");
        ConfigOverrides ov;
        ov.lambda = 0.07;
        const auto c = parse_config(is, ov);
        CHECK(c.model.lambda == 0.07);
        CHECK(c.lambdas == std::vector<double>{0.07});
        std::istringstream again("[model]\nlambda = 0.2\nsigma = 0.3\n[sweep]\nlambdas = 0.01, 0.02\n");
        CHECK(parse_config(again).lambdas == std::vector<double>{0.01, 0.02});
    }

    TEST_CASE("missing required key is named") {
        CHECK(error_of("[model]\nsigma = 0.25\n") == "config is missing required key 'model.lambda'");
        CHECK(error_of("[model]\nlambda = 0.25\n") == "config is missing required key 'model.sigma'");
    }

    TEST_CASE("unknown key is named") {
        CHECK(error_of("[model]\nlambda = 0.1\nsigma = 0.2\nlamda = 0.3\n").find("'model.lamda'") != std::string::npos);
        CHECK(error_of("[modle]\nlambda = 0.1\n").find("'modle.lambda'") != std::string::npos);
    }

    TEST_CASE("empty value is named") {
        CHECK(error_of("[model]\nlambda =\nsigma = 0.2\n") == "config key 'model.lambda' is missing a value");
    }

    TEST_CASE("invalid values are named") {
        CHECK(error_of("[model]\nlambda = abc\nsigma = 0.2\n").find("model.lambda") != std::string::npos);
        CHECK(error_of("[model]\nlambda = 0.1\nsigma = 0.2\nP = 1, 2\n").find("model.P") != std::string::npos);
        CHECK_FALSE(error_of("[model]\nlambda = 0.1\nsigma = 2\n").empty());
        CHECK_FALSE(error_of("[model]\nlambda = 0.1\nsigma = 0.2\nalpha_bar = 0.7\n").empty());
    }

    TEST_CASE("INI round trip") {
        std::istringstream is("[model]\nlambda = 0.15\nsigma = 0.05\nP = 0.1, -0.02, 0.03\n[grid]\npolar = 5\n"
                              "[solver]\nseed = 99\n[derivatives]\nfd_step = 0.04\n[sweep]\nlambdas = 0.05, 0.1, 0.2\n");
        const auto c = parse_config(is);
        const std::string ini = config_to_ini(c);
        std::istringstream back(ini);
        const auto d = parse_config(back);
        CHECK(config_to_ini(d) == ini);
        CHECK(d.model.P == c.model.P);
        CHECK(d.grid.nPolar == 5);
        CHECK(d.solver.seed == 99);
        CHECK(d.fd.h == 0.04);
        CHECK(d.lambdas == c.lambdas);
        CHECK(to_json(d) == to_json(c));
    }

    TEST_CASE("every documented key is accepted") {
        const auto keys = config_keys();
        CHECK(keys.size() > 20);
        const std::string ini = config_to_ini(RunConfig{});
        for (const auto& k : keys) {
            const auto dot = k.find('.');
            CHECK(ini.find(k.substr(dot + 1) + " = ") != std::string::npos);
        }
    }

    TEST_CASE("NELSON_LAB_OUT overrides the output directory last") {
        const auto path = std::filesystem::temp_directory_path() / "nelson_config_test.ini";
        {
            std::ofstream f(path);
            f << "[model]\nlambda = 0.1\nsigma = 0.2\n[output]\ndir = from_file\n";
        }
        ConfigOverrides ov;
        ov.out = "from_flag";
        ::unsetenv("NELSON_LAB_OUT");
        CHECK(load_config(path.string(), {}).outDir == "from_file");
        CHECK(load_config(path.string(), ov).outDir == "from_flag");
        ::setenv("NELSON_LAB_OUT", "from_env", 1);
        CHECK(load_config(path.string(), ov).outDir == "from_env");
        ::unsetenv("NELSON_LAB_OUT");
        std::filesystem::remove(path);
        CHECK_THROWS_AS(load_config(std::string("/nonexistent/x.ini"), {}), Error);
    }
}
