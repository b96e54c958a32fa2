#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fpcavity/resonator_modes.hpp"

using namespace fpcavity;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Toroidal-mirror reference cavity used throughout the suite.
CavityGeometry reference_cavity() {
    return CavityGeometry{0.02757, 0.0394, 0.0406, 0.050, 10e-9};
}

CavityGeometry mean_cavity() { return mean_radius_geometry(reference_cavity()); }

constexpr double kRefFrequencyHz = 51.099e9;
const double kRefWavelengthM = kSpeedOfLight / kRefFrequencyHz;

// Random stable geometry: R > L/2 on both axes guarantees g^2 < 1.
CavityGeometry random_stable_geometry(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    CavityGeometry geom;
    geom.length_m = 0.005 + 0.045 * u01(gen);
    geom.radius_x_m = geom.length_m * (0.52 + 3.0 * u01(gen));
    geom.radius_y_m = geom.length_m * (0.52 + 3.0 * u01(gen));
    geom.mirror_diameter_m = 0.05;
    geom.roughness_rms_m = 10e-9;
    return geom;
}

}  // namespace

TEST_CASE("stability parameters of the toroidal cavity") {
    const auto [gx, gy] = stability_g(reference_cavity());
    REQUIRE_THAT(gx, WithinRel(0.3002538071065990, 1e-12));
    REQUIRE_THAT(gy, WithinRel(0.3209359605911330, 1e-12));
}

TEST_CASE("stability parameter vanishes when L equals R") {
    const CavityGeometry geom{0.04, 0.04, 0.04, 0.05, 0.0};
    const auto [gx, gy] = stability_g(geom);
    REQUIRE_THAT(gx, WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(gy, WithinAbs(0.0, 1e-15));
}

TEST_CASE("mode geometry reproduces the reference waist and spot ratio") {
    const ModeProperties mode = mode_geometry(mean_cavity(), kRefWavelengthM);
    REQUIRE_THAT(mode.waist_x_m, WithinRel(0.005958245212055650, 1e-12));
    REQUIRE_THAT(mode.mirror_spot_x_m / mode.waist_x_m,
                 WithinRel(1.2352505747631912, 1e-12));
    // Single-figure cross-checks: w0 close to 6 mm, spot ratio close to 1.23.
    REQUIRE(mode.waist_x_m > 5.9e-3);
    REQUIRE(mode.waist_x_m < 6.0e-3);

    const ModeProperties toroidal = mode_geometry(reference_cavity(), kRefWavelengthM);
    REQUIRE_THAT(toroidal.waist_x_m, WithinRel(0.005923856058344966, 1e-12));
    REQUIRE_THAT(toroidal.waist_y_m, WithinRel(0.005992049018386910, 1e-12));
    REQUIRE_THAT(toroidal.rayleigh_x_m,
                 WithinRel(0.5 * std::sqrt(0.02757 * (2 * 0.0394 - 0.02757)), 1e-12));
}

TEST_CASE("confocal cavity has analytic Rayleigh range and waist") {
    const double length = 0.03;
    const CavityGeometry geom{length, length, length, 0.05, 0.0};
    const double wavelength = 0.006;
    const ModeProperties mode = mode_geometry(geom, wavelength);
    REQUIRE_THAT(mode.rayleigh_x_m, WithinRel(length / 2.0, 1e-12));
    REQUIRE_THAT(mode.waist_x_m,
                 WithinRel(std::sqrt(wavelength * length / (2.0 * kPi)), 1e-12));
}

TEST_CASE("free spectral range is c over twice the length") {
    REQUIRE_THAT(free_spectral_range(reference_cavity()),
                 WithinRel(5436932499.093217, 1e-12));
}

TEST_CASE("TEM(9,0,0) frequency lands near the reference mode") {
    const double nu = resonance_frequency(reference_cavity(), {9, 0, 0});
    REQUIRE_THAT(nu, WithinRel(51104259975.837, 1e-9));
    REQUIRE(std::abs(nu - kRefFrequencyHz) / kRefFrequencyHz < 5e-4);
}

TEST_CASE("transverse mode offset equals the Gouy term") {
    const CavityGeometry geom = reference_cavity();
    const double diff =
        resonance_frequency(geom, {9, 1, 0}) - resonance_frequency(geom, {9, 0, 0});
    REQUIRE_THAT(diff, WithinRel(2190695720.99, 1e-9));
    const auto [gx, gy] = stability_g(geom);
    REQUIRE_THAT(diff, WithinRel(free_spectral_range(geom) * std::acos(gx) / kPi,
                                 1e-12));
}

TEST_CASE("longitudinal spacing equals the free spectral range", "[property]") {
    std::mt19937_64 gen(42);
    for (int trial = 0; trial < 50; ++trial) {
        const CavityGeometry geom = random_stable_geometry(gen);
        const int q = 1 + static_cast<int>(gen() % 40);
        const double lhs = resonance_frequency(geom, {q + 1, 0, 0}) -
                           resonance_frequency(geom, {q, 0, 0});
        REQUIRE_THAT(lhs, WithinRel(free_spectral_range(geom), 1e-12));
    }
}

TEST_CASE("mirror spot never falls below the waist", "[property]") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 50; ++trial) {
        const CavityGeometry geom = random_stable_geometry(gen);
        const ModeProperties mode = mode_geometry(geom, 0.005);
        REQUIRE(mode.mirror_spot_x_m >= mode.waist_x_m);
        REQUIRE(mode.mirror_spot_y_m >= mode.waist_y_m);
        REQUIRE(mode.gouy_x_rad > 0.0);
        REQUIRE(mode.gouy_x_rad < kPi);
        REQUIRE(mode.gouy_y_rad > 0.0);
        REQUIRE(mode.gouy_y_rad < kPi);
    }
}

TEST_CASE("near-planar cavity approaches pure longitudinal spacing") {
    CavityGeometry geom = reference_cavity();
    geom.radius_x_m = geom.radius_y_m = 1e3;
    const double fsr = free_spectral_range(geom);
    const double res_1km = std::abs(resonance_frequency(geom, {9, 2, 3}) / (9 * fsr) - 1.0);
    geom.radius_x_m = geom.radius_y_m = 1e6;
    const double res_1000km =
        std::abs(resonance_frequency(geom, {9, 2, 3}) / (9 * fsr) - 1.0);
    REQUIRE(res_1000km < res_1km);
    REQUIRE(res_1000km < 1e-4);
}

TEST_CASE("polarization splitting of the toroidal mirrors") {
    const double split = polarization_splitting(reference_cavity(), kRefWavelengthM);
    REQUIRE_THAT(split, WithinRel(1212248.0453963515, 1e-12));
    REQUIRE(std::abs(split - 1.2e6) / 1.2e6 < 0.15);
}

TEST_CASE("polarization splitting vanishes iff the radii are equal") {
    REQUIRE(polarization_splitting(mean_cavity(), kRefWavelengthM) == 0.0);

    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 30; ++trial) {
        const CavityGeometry geom = random_stable_geometry(gen);
        const double split = polarization_splitting(geom, 0.005);
        CavityGeometry swapped = geom;
        std::swap(swapped.radius_x_m, swapped.radius_y_m);
        REQUIRE(split == polarization_splitting(swapped, 0.005));
        if (geom.radius_x_m != geom.radius_y_m) REQUIRE(split > 0.0);
    }
}

TEST_CASE("polarization splitting is linear in the curvature difference") {
    // Doubling |1/Rx - 1/Ry| at fixed L doubles the splitting.
    const CavityGeometry base = reference_cavity();
    const double inv_x = 1.0 / base.radius_x_m;
    const double inv_y = 1.0 / base.radius_y_m;
    const double mid = 0.5 * (inv_x + inv_y);
    CavityGeometry doubled = base;
    doubled.radius_x_m = 1.0 / (mid + (inv_x - mid) * 2.0);
    doubled.radius_y_m = 1.0 / (mid + (inv_y - mid) * 2.0);
    REQUIRE_THAT(polarization_splitting(doubled, kRefWavelengthM),
                 WithinRel(2.0 * polarization_splitting(base, kRefWavelengthM), 1e-12));
}

TEST_CASE("intensity profile peaks at the origin and knows its waist") {
    const ModeProperties mode = mode_geometry(mean_cavity(), kRefWavelengthM);
    REQUIRE(intensity_profile(mode, 0.0, 0.0, 0.0) == 1.0);
    REQUIRE_THAT(intensity_profile(mode, mode.waist_x_m, 0.0, 0.0),
                 WithinRel(std::exp(-2.0), 1e-12));
    // 6 mm displacement sits close to the waist, so close to exp(-2).
    REQUIRE_THAT(intensity_profile(mode, 6e-3, 0.0, 0.0),
                 WithinAbs(std::exp(-2.0), 0.01));
}

TEST_CASE("intensity profile is even in x and y and bounded by 1", "[property]") {
    const ModeProperties mode = mode_geometry(reference_cavity(), kRefWavelengthM);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> coord(-0.02, 0.02);
    for (int trial = 0; trial < 100; ++trial) {
        const double x = coord(gen), y = coord(gen), z = coord(gen);
        const double value = intensity_profile(mode, x, y, z);
        REQUIRE(value == intensity_profile(mode, -x, y, z));
        REQUIRE(value == intensity_profile(mode, x, -y, z));
        REQUIRE(value <= 1.0);
        REQUIRE(value >= 0.0);
    }
}

TEST_CASE("one hertz of detuning maps to the sub-picometer mirror shift") {
    const CavityGeometry geom = reference_cavity();
    const double displacement =
        detuning_to_displacement(geom, kRefFrequencyHz, 1.0);
    REQUIRE_THAT(std::abs(displacement), WithinRel(5.395408912111783e-13, 1e-12));
    // Order-of-magnitude check against the half-picometer scale.
    REQUIRE(std::abs(std::abs(displacement) - 500e-15) / 500e-15 < 0.10);

    REQUIRE(displacement_to_detuning(geom, kRefFrequencyHz, 0.0) == 0.0);
    REQUIRE_THAT(std::abs(detuning_to_displacement(geom, kRefFrequencyHz, 5e6)),
                 WithinRel(2.6977044560558915e-6, 1e-12));
}

TEST_CASE("detuning and displacement conversions invert each other", "[property]") {
    const CavityGeometry geom = reference_cavity();
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> detuning(-5e6, 5e6);
    for (int trial = 0; trial < 100; ++trial) {
        const double shift = detuning(gen);
        const double roundtrip = displacement_to_detuning(
            geom, kRefFrequencyHz,
            detuning_to_displacement(geom, kRefFrequencyHz, shift));
        REQUIRE_THAT(roundtrip, WithinRel(shift, 1e-12));
    }
}

TEST_CASE("unstable and invalid geometries are rejected") {
    CavityGeometry concentric = reference_cavity();
    concentric.length_m = 2.0 * concentric.radius_x_m;  // g_x = -1
    REQUIRE_THROWS_AS(mode_geometry(concentric, kRefWavelengthM), UnstableGeometry);
    REQUIRE_THROWS_AS(resonance_frequency(concentric, {9, 0, 0}), UnstableGeometry);
    REQUIRE_THROWS_AS(polarization_splitting(concentric, kRefWavelengthM),
                      UnstableGeometry);

    CavityGeometry negative = reference_cavity();
    negative.length_m = -1.0;
    REQUIRE_THROWS_AS(stability_g(negative), NonPositiveInput);

    REQUIRE_THROWS_AS(resonance_frequency(reference_cavity(), {0, 0, 0}),
                      NonPositiveInput);
    REQUIRE_THROWS_AS(mode_geometry(reference_cavity(), -1.0), NonPositiveInput);
}

TEST_CASE("marginally stable confocal geometry is accepted") {
    // g = 0 on both axes; the formulas stay regular there.
    const CavityGeometry geom{0.04, 0.04, 0.04, 0.05, 0.0};
    const ModeProperties mode = mode_geometry(geom, 0.005);
    REQUIRE(mode.waist_x_m > 0.0);
    REQUIRE_THAT(resonance_frequency(geom, {5, 0, 0}),
                 WithinRel(free_spectral_range(geom) * 5.5, 1e-12));
}
