#include <doctest.h>

#include <cmath>

#include "risnoma/energy.hpp"
#include "risnoma/errors.hpp"

using namespace risnoma;

TEST_CASE("RF harvest anchors") {
    const RfHarvestParams p;
    CHECK(harvest_rf(0.0, p) == 0.0);
    CHECK(std::abs(harvest_rf(p.b + 50.0 / p.a, p) - p.e_max) < 1e-9);

    // Midpoint p_rf = b in extended precision.
    const long double omega = 1.0L / (1.0L + std::exp(static_cast<long double>(p.a) * p.b));
    const long double mid = p.e_max * (0.5L - omega) / (1.0L - omega);
    CHECK(harvest_rf(p.b, p) == doctest::Approx(static_cast<double>(mid)).epsilon(1e-13));
}

TEST_CASE("RF harvest is monotone and bounded") {
    const RfHarvestParams p;
    double prev = harvest_rf(0.0, p);
    for (int i = 1; i <= 1000; ++i) {
        const double x = 0.1 * i / 1000.0;
        const double y = harvest_rf(x, p);
        CHECK(y >= prev);
        CHECK(y >= 0.0);
        CHECK(y <= p.e_max);
        prev = y;
    }
}

TEST_CASE("solar harvest") {
    SolarParams s;
    s.a1 = -1.0;
    s.a2 = -12.0;
    s.a3 = 36.0;
    s.s_sol = 1.0;
    s.sigma_sol = 0.0;
    CHECK(harvest_solar(12.0, s) == 36.0);
    CHECK(harvest_solar(15.0, s) == 27.0);
    CHECK(harvest_solar(30.0, s) == 0.0);
    s.sigma_sol = 1.0;
    CHECK(harvest_solar(12.0, s) == 0.0);
    s.sigma_sol = 0.0;
    s.s_sol = 0.0;
    CHECK(harvest_solar(12.0, s) == 0.0);
}

TEST_CASE("surface consumption") {
    ChannelRealization ch;
    ch.h_direct = {0.0};
    ch.h_bs_ris = {1.0};
    ch.h_ris_user = Eigen::MatrixXcd::Ones(1, 1);
    CHECK(ris_consumption(ch, RisControl{{2.0}, {1.0}}, {0.5, 0.0}) == 6.0);
    CHECK(ris_consumption(ch, RisControl::off(1), {0.5, 0.0}) == 0.0);
    CHECK(unit_amplitude_consumption(ch, {0.5, 0.0}) == 1.5);

    CounterRng rng(3);
    ChannelRealization big;
    big.h_direct = {0.0};
    big.h_ris_user = Eigen::MatrixXcd::Ones(1, 32);
    RisControl c;
    for (int m = 0; m < 32; ++m) {
        big.h_bs_ris.push_back(0.01 * rng.complex_normal());
        c.amp.push_back(rng.uniform(0.0, 25.0));
        c.phase.push_back(rng.uniform(0.0, 6.0));
    }
    long double oracle = 0.0L;
    for (int m = 0; m < 32; ++m) {
        const long double a2 = static_cast<long double>(c.amp[m]) * c.amp[m];
        oracle += a2 * std::norm(big.h_bs_ris[m]) + a2 * 1e-14L;
    }
    const double got = ris_consumption(big, c, {1e-14, 0.0});
    CHECK(std::abs(got - static_cast<double>(oracle)) / static_cast<double>(oracle) < 1e-12);
    CHECK_THROWS_AS(ris_consumption(big, RisControl::off(3), {1e-14, 0.0}), ShapeError);
}

TEST_CASE("battery update") {
    EnergyState s;
    s.e_max_battery = 0.6;

    s.battery = 0.3;
    s.eta = 1.0;
    auto n = battery_step(s, 0.2, 0.1);
    CHECK(n.battery == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(n.last_overflow == doctest::Approx(0.0));

    s.battery = 0.6;
    s.eta = 0.9;
    n = battery_step(s, 0.6, 0.0);
    CHECK(n.battery == 0.6);
    CHECK(n.last_overflow == doctest::Approx(0.54).epsilon(1e-14));
    CHECK(n.last_harvest == 0.6);

    s.battery = 0.123;
    n = battery_step(s, 0.0, 0.123);
    CHECK(n.battery == 0.0);
    CHECK(n.last_consume == 0.123);

    CHECK_THROWS_AS(battery_step(s, 0.0, 0.2), InvariantViolation);
    CHECK_THROWS_AS(battery_step(s, -0.1, 0.0), InvariantViolation);
}

TEST_CASE("battery ledger closes over a random trajectory") {
    CounterRng rng(9);
    EnergyState s;
    s.battery = 0.3;
    const double start = s.battery;
    long double in = 0.0L;
    long double out = 0.0L;
    long double lost = 0.0L;
    for (int t = 0; t < 10000; ++t) {
        const double e_h = rng.uniform(0.0, 0.1);
        const double e_c = rng.uniform(0.0, s.battery);
        s = battery_step(s, e_h, e_c);
        REQUIRE(s.battery >= 0.0);
        REQUIRE(s.battery <= s.e_max_battery);
        in += s.eta * e_h;
        out += e_c;
        lost += s.last_overflow;
    }
    CHECK(std::abs(static_cast<double>(start + in - out - lost) - s.battery) < 1e-9);
}
