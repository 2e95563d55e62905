#include <doctest.h>

#include <sstream>

#include "qdf/error.hpp"
#include "qdf/io.hpp"

using namespace qdf;

TEST_SUITE("io") {

TEST_CASE("sweep and spectrum CSV") {
    SweepResult s;
    s.axis = {0.125, 1.0};
    s.values = {0.25, 0.5};
    s.epsilon_used = {1e-3, 0.25};
    s.converged = {true, false};
    std::ostringstream out;
    write_sweep_csv(out, s);
    CHECK(out.str() == "axis_value,g2,epsilon_used,converged\n0.125,0.25,0.001,true\n1,0.5,0.25,false\n");

    std::ostringstream spec;
    write_spectrum_csv(spec, s);
    CHECK(spec.str().rfind("detuning_over_gamma,normalized_intensity\n0.125,0.25\n", 0) == 0);
}

TEST_CASE("two-column reader") {
    std::istringstream in("# comment\ntime,counts\n0,1\n\n1.5, 2e3\n");
    const auto [x, y] = read_two_column_csv(in);
    CHECK(x == std::vector<double>{0.0, 1.5});
    CHECK(y == std::vector<double>{1.0, 2000.0});

    std::istringstream bad("t,c\n0,1\n1,oops\n");
    try {
        read_two_column_csv(bad);
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

}
