#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sfl/lattice.hpp"

using sfl::Complex;
using sfl::LatticePotential;
using sfl::SpectralPoint;

namespace {

LatticePotential pot(std::map<int, double> m) { return LatticePotential(m); }

}  // namespace

TEST_CASE("LatticePotential invariants and arithmetic") {
    CHECK_THROWS_AS(pot({{0, 0.0}}), sfl::InputError);
    CHECK_THROWS_AS(pot({{0, NAN}}), sfl::InputError);
    const auto a = pot({{0, 1.0}, {2, -0.5}});
    const auto b = pot({{0, -1.0}, {3, 2.0}});
    const auto s = a + b;
    CHECK(s.sites() == std::vector<int>{2, 3});
    CHECK(s.at(2) == -0.5);
    CHECK(s.at(0) == 0.0);
    CHECK((a - a).empty());
    CHECK((a * 0.0).empty());
    CHECK((a * 2.0).at(2) == -1.0);
    CHECK(a.norm() == 1.0);
    CHECK(a.sum() == 0.5);
}

TEST_CASE("factor_potential examples") {
    const auto f1 = sfl::factor_potential(pot({{0, 1.0}}));
    CHECK(f1.rank() == 1);
    CHECK(f1.g(0) == 1.0);
    CHECK(f1.j(0) == 1.0);

    const auto f2 = sfl::factor_potential(pot({{0, -4.0}}));
    CHECK(f2.g(0) == 2.0);
    CHECK(f2.j(0) == -1.0);

    const auto f3 = sfl::factor_potential(pot({{-1, 1.0}, {3, -2.25}}));
    CHECK(f3.sites == std::vector<int>{-1, 3});
    CHECK(f3.g(0) == 1.0);
    CHECK(f3.g(1) == 1.5);
    CHECK(f3.j(0) == 1.0);
    CHECK(f3.j(1) == -1.0);
    CHECK(f3.potential() == pot({{-1, 1.0}, {3, -2.25}}));
    CHECK((f3.j_matrix() * f3.j_matrix() - Eigen::Matrix2d::Identity()).norm() == 0.0);

    CHECK_THROWS_AS(sfl::factor_potential(LatticePotential{}), sfl::InputError);
}

TEST_CASE("free resolvent off the band matches a truncated solve") {
    const Complex closed = sfl::free_resolvent_kernel(SpectralPoint::off_axis(3.0), 0, 0);
    CHECK(std::abs(closed - (-1.0 / std::sqrt(5.0))) < 1e-14);
    const Complex truncated = oracle::truncated_resolvent({}, 3.0, 0, 0, 2000);
    CHECK(std::abs(closed - truncated) < 1e-12);
    for (int d : {1, 2, 5})
        CHECK(std::abs(sfl::free_resolvent_kernel(SpectralPoint::off_axis(3.0), d, 0) -
                       oracle::truncated_resolvent({}, 3.0, d, 0, 2000)) < 1e-12);
}

TEST_CASE("boundary values at lambda + i0 and the branch convention") {
    const auto p = SpectralPoint::plus_i0(0.0);
    const Complex diag = sfl::free_resolvent_kernel(p, 0, 0);
    const Complex off2 = sfl::free_resolvent_kernel(p, 0, 2);
    CHECK(std::abs(diag - Complex(0.0, 0.5)) < 1e-14);
    CHECK(std::abs(off2 - Complex(0.0, -0.5)) < 1e-14);
    CHECK(std::abs(diag - oracle::boundary_resolvent({}, 0.0, 0, 0)) < 1e-7);
    CHECK(std::abs(off2 - oracle::boundary_resolvent({}, 0.0, 0, 2)) < 1e-7);

    // Regression lock on the branch: Im r0(lambda + i0; n, n) > 0 across the band.
    for (double lambda = -1.99; lambda < 1.995; lambda += 0.01)
        CHECK(sfl::free_resolvent_kernel(SpectralPoint::plus_i0(lambda), 3, 3).imag() > 0.0);
    for (double lambda : {-1.7, 0.7, 1.3})
        for (int d : {0, 1, 3})
            CHECK(std::abs(sfl::free_resolvent_kernel(SpectralPoint::plus_i0(lambda), d, 0) -
                           oracle::boundary_resolvent({}, lambda, d, 0)) < 1e-6);

    CHECK_THROWS_AS(SpectralPoint::off_axis(Complex(1.0, 0.0)), sfl::DomainError);
    CHECK_THROWS_AS(SpectralPoint::plus_i0(2.0), sfl::BandEdgeError);
    CHECK_THROWS_AS(SpectralPoint::plus_i0(-2.5), sfl::BandEdgeError);
}

TEST_CASE("resolvent defect recurrence") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> re(-4.0, 4.0);
    std::uniform_real_distribution<double> im(-2.0, 2.0);
    std::uniform_int_distribution<int> site(-8, 8);
    int done = 0;
    while (done < 50) {
        const Complex z(re(rng), im(rng));
        if (std::abs(z.imag()) < 1e-3) continue;
        const auto p = SpectralPoint::off_axis(z);
        const int n = site(rng);
        const int m = site(rng);
        const Complex lhs = sfl::free_resolvent_kernel(p, n + 1, m) + sfl::free_resolvent_kernel(p, n - 1, m) -
                            z * sfl::free_resolvent_kernel(p, n, m);
        CHECK(std::abs(lhs - (n == m ? 1.0 : 0.0)) <= 1e-12);
        ++done;
    }
}

TEST_CASE("truncation consistency slightly above the band") {
    // The window must outlast the decay length 2 sin k / eps of the wave
    // reflected at the Dirichlet walls.
    for (double lambda : {-1.5, 0.0, 0.8}) {
        const Complex z(lambda, 1e-4);
        const auto p = SpectralPoint::off_axis(z);
        const auto column = oracle::truncated_resolvent_column({}, 200000, z, 0, {0, 1, 4});
        CHECK(std::abs(column[0] - sfl::free_resolvent_kernel(p, 0, 0)) <= 1e-6);
        CHECK(std::abs(column[1] - sfl::free_resolvent_kernel(p, 1, 0)) <= 1e-6);
        CHECK(std::abs(column[2] - sfl::free_resolvent_kernel(p, 4, 0)) <= 1e-6);
    }
}

TEST_CASE("sandwiched resolvent examples") {
    const auto f = sfl::factor_potential(pot({{0, 1.0}}));
    const auto t = sfl::sandwiched_resolvent(f, SpectralPoint::plus_i0(0.0));
    CHECK(std::abs(t.matrix(0, 0) - Complex(0.0, 0.5)) < 1e-14);
    CHECK(std::abs(t.b(0, 0) - 0.5) < 1e-14);

    const auto t3 = sfl::sandwiched_resolvent(f, SpectralPoint::off_axis(3.0));
    CHECK(std::abs(t3.matrix(0, 0) + 1.0 / std::sqrt(5.0)) < 1e-14);
    CHECK(t3.b.norm() < 1e-15);

    const auto f2 = sfl::factor_potential(pot({{0, 1.0}, {2, 1.0}}));
    const auto t2 = sfl::sandwiched_resolvent(f2, SpectralPoint::plus_i0(0.0));
    Eigen::Matrix2cd expected;
    expected << Complex(0, 0.5), Complex(0, -0.5), Complex(0, -0.5), Complex(0, 0.5);
    CHECK((t2.matrix - expected).norm() < 1e-14);

    // Real symmetric off the band on the real axis.
    const auto f3 = sfl::factor_potential(pot({{-1, 2.0}, {1, -0.3}, {4, 0.7}}));
    const auto t4 = sfl::sandwiched_resolvent(f3, SpectralPoint::off_axis(-2.7));
    CHECK(t4.matrix.imag().norm() < 1e-15);
    CHECK((t4.matrix - t4.matrix.transpose()).norm() < 1e-15);
}

TEST_CASE("Herglotz property and B0 positivity") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> re(-3.0, 3.0);
    std::uniform_real_distribution<double> im(0.01, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto f = sfl::factor_potential(LatticePotential(oracle::random_potential(rng, 4, 3.0)));
        const auto t = sfl::sandwiched_resolvent(f, SpectralPoint::off_axis(Complex(re(rng), im(rng))));
        // G Im R_z G* is positive definite for Im z > 0 (G invertible on the support).
        Eigen::SelfAdjointEigenSolver<sfl::MatrixXc> es(t.b);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
    const auto f = sfl::factor_potential(pot({{-2, 1.0}, {0, -3.0}, {1, 0.5}, {5, 2.0}}));
    for (double lambda = -1.99; lambda < 1.995; lambda += 0.01) {
        const auto t = sfl::sandwiched_resolvent(f, SpectralPoint::plus_i0(lambda));
        Eigen::SelfAdjointEigenSolver<sfl::MatrixXc> es(t.b);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
}

TEST_CASE("channel map normalization and gauge identity") {
    const auto f = sfl::factor_potential(pot({{0, 1.0}}));
    const auto z = sfl::channel_map(f, 0.0).z;
    const double rho = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    CHECK(std::abs(z(0, 0) - rho) < 1e-15);
    CHECK(std::abs(z(1, 0) - rho) < 1e-15);
    CHECK(std::abs(std::numbers::pi * (z.adjoint() * z)(0, 0) - 0.5) < 1e-14);

    const auto f2 = sfl::factor_potential(pot({{0, 1.0}, {2, 1.0}}));
    const auto z2 = sfl::channel_map(f2, 0.0).z;
    CHECK(std::abs(std::numbers::pi * (z2.adjoint() * z2)(0, 1) - (-0.5)) < 1e-14);

    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const auto fr = sfl::factor_potential(LatticePotential(oracle::random_potential(rng, 4, 3.0)));
        for (double lambda = -1.95; lambda < 1.96; lambda += 0.05) {
            const auto zr = sfl::channel_map(fr, lambda).z;
            const auto t = sfl::sandwiched_resolvent(fr, SpectralPoint::plus_i0(lambda));
            CHECK((std::numbers::pi * zr.adjoint() * zr - t.b).norm() <= 1e-10);
        }
    }
    CHECK_THROWS_AS(sfl::channel_map(f, 1.9995), sfl::BandEdgeError);
    CHECK_NOTHROW(sfl::channel_map(f, 1.9995, 1e-4));
    CHECK_THROWS_AS(sfl::band_momentum(-2.0), sfl::BandEdgeError);
    CHECK(sfl::band_momentum(0.0) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("perturbation kernel") {
    const auto f = sfl::factor_potential(pot({{0, 1.0}}));
    const double l1 = 0.4;
    const double l2 = -1.1;
    const auto v = sfl::perturbation_kernel(f, l1, l2);
    const double rho1 = std::sqrt(sfl::channel_normalization(l1));
    const double rho2 = std::sqrt(sfl::channel_normalization(l2));
    CHECK((v - Eigen::Matrix2cd::Constant(rho1 * rho2)).norm() < 1e-14);
    CHECK(rho1 * rho1 == doctest::Approx(1.0 / (4 * std::numbers::pi * std::sin(std::acos(l1 / 2)))));

    const auto fa = sfl::factor_potential(pot({{0, 1.0}, {3, -2.0}}));
    const auto fb = sfl::factor_potential(pot({{0, -1.0}, {3, 2.0}}));
    CHECK((sfl::perturbation_kernel(fa, l1, l2) + sfl::perturbation_kernel(fb, l1, l2)).norm() < 1e-14);
}

TEST_CASE("bound states worked examples") {
    const auto f = sfl::factor_potential(pot({{0, 1.0}}));
    const auto one = sfl::bound_states(f, 1.0);
    REQUIRE(one.energies.size() == 1);
    CHECK(std::abs(one.energies[0] - std::sqrt(5.0)) < 1e-11);
    CHECK(sfl::bound_states(f, 0.0).energies.empty());
    const auto neg = sfl::bound_states(pot({{0, -1.0}}));
    REQUIRE(neg.energies.size() == 1);
    CHECK(std::abs(neg.energies[0] + std::sqrt(5.0)) < 1e-11);
    CHECK(sfl::bound_states(LatticePotential{}).energies.empty());
}

TEST_CASE("bound states agree with truncated spectra") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 25; ++trial) {
        const auto v = LatticePotential(oracle::random_potential(rng, 4, 3.0));
        const auto bs = sfl::bound_states(v);
        const Eigen::VectorXd spec = sfl::truncated_spectrum(v, 2001);
        std::vector<double> outside;
        // Truncation eigenvalues within the band stay inside [-2, 2]; keep those
        // clearly separated from it.
        for (double e : spec)
            if (std::abs(e) > 2.0 + 1e-6) outside.push_back(e);
        if (bs.near_band_edge) continue;
        REQUIRE(outside.size() == bs.energies.size());
        for (std::size_t i = 0; i < outside.size(); ++i) CHECK(std::abs(outside[i] - bs.energies[i]) <= 1e-8);

        for (double q : {-3.3, -2.4, 2.4, 3.3}) {
            const int above = static_cast<int>(std::count_if(outside.begin(), outside.end(), [q](double e) { return e > q; }));
            const int below = static_cast<int>(std::count_if(outside.begin(), outside.end(), [q](double e) { return e <= q; }));
            CHECK(sfl::bound_states_beyond(v, q) == (q > 0 ? above : below));
        }
    }
    CHECK_THROWS_AS(sfl::bound_states_beyond(pot({{0, 1.0}}), 1.0), sfl::DomainError);
}

TEST_CASE("bound state weight matches the truncated eigenvector") {
    const auto v = pot({{0, 1.5}, {1, -0.4}, {3, 2.0}});
    const auto d = pot({{1, 1.0}, {2, 0.5}, {3, -1.0}});
    const auto es = sfl::eigh(sfl::truncate(v, 401));
    const auto bs = sfl::bound_states(v);
    REQUIRE(!bs.energies.empty());
    for (double e : bs.energies) {
        Eigen::Index k = 0;
        (es.eigenvalues.array() - e).abs().minCoeff(&k);
        const Eigen::VectorXd psi = es.eigenvectors.col(k);
        double expected = 0.0;
        for (const auto& [site, c] : d.couplings()) expected += c * psi(site + 200) * psi(site + 200);
        CHECK(std::abs(sfl::bound_state_weight(v, e, d).weight - expected) < 1e-9);
    }
}

TEST_CASE("resolvent energy derivative") {
    for (double e : {-3.1, 2.2, 4.0})
        for (int d : {0, 1, 3}) {
            const double h = 1e-5;
            const double fd = (sfl::free_resolvent_kernel(SpectralPoint::off_axis(e + h), d, 0).real() -
                               sfl::free_resolvent_kernel(SpectralPoint::off_axis(e - h), d, 0).real()) /
                              (2 * h);
            CHECK(std::abs(sfl::free_resolvent_kernel_derivative(e, d, 0) - fd) < 1e-7);
        }
}

TEST_CASE("truncate examples") {
    const auto h = sfl::truncate(LatticePotential{}, 3);
    Eigen::Matrix3d expected;
    expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    CHECK((h.matrix() - expected).norm() == 0.0);

    const auto h5 = sfl::truncate(pot({{0, 5.0}}), 3);
    expected(1, 1) = 5.0;
    CHECK((h5.matrix() - expected).norm() == 0.0);

    const Eigen::VectorXd spec = sfl::truncated_spectrum(pot({{0, 1.0}}), 2001);
    CHECK(std::abs(spec(spec.size() - 1) - std::sqrt(5.0)) <= 1e-10);
    CHECK((spec - sfl::eigvalsh(sfl::truncate(pot({{0, 1.0}}), 2001))).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(sfl::truncate(pot({{2, 1.0}}), 3), sfl::ConfigError);
    CHECK_THROWS_AS(sfl::truncate(LatticePotential{}, 4), sfl::ConfigError);
    CHECK_THROWS_AS(sfl::truncate(LatticePotential{}, 1), sfl::ConfigError);
}
