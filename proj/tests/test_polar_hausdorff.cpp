#include <gtest/gtest.h>

#include <numbers>

#include "edgeps/polar_hausdorff.hpp"
#include "edgeps/synthgen.hpp"
#include "oracles.hpp"

using namespace edgeps;

namespace {

SoftMask annulus(double r_in, double r_out, int size = 64) {
    return to_soft(gen_band(BandSpec::annulus(r_in, r_out, size)));
}

double square_radius(double half, double theta) {
    return half / std::max(std::fabs(std::cos(theta)), std::fabs(std::sin(theta)));
}

PhdConfig rays(int n) {
    PhdConfig cfg;
    cfg.rays = n;
    return cfg;
}

template <typename Fn>
void expect_kind(Fn&& fn, ErrorKind kind) {
    try {
        fn();
        FAIL() << "no error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

}  // namespace

TEST(Binarize, StrictThreshold) {
    EXPECT_EQ(count_set(binarize(SoftMask(4, 4, 0.5))), 0u);
    EXPECT_EQ(count_set(binarize(SoftMask(4, 4, 0.7))), 16u);
    CounterRng rng(3);
    SoftMask p(9, 7);
    for (auto& v : p.pixels()) v = rng.uniform();
    const BinaryMask b = binarize(p, 0.3);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(b[i], p[i] > 0.3 ? 1 : 0);
}

TEST(ContourOfBand, AnnulusGivesTwoRings) {
    const BinaryMask contour = contour_of_band(binarize(annulus(10, 15)));
    int near_inner = 0, near_outer = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (!contour(x, y)) continue;
            const double r = std::hypot(x - 32.0, y - 32.0);
            if (std::fabs(r - 10.0) <= 1.0) ++near_inner;
            else if (std::fabs(r - 15.0) <= 1.0) ++near_outer;
            else ADD_FAILURE() << "contour pixel at radius " << r;
        }
    EXPECT_GT(near_inner, 40);
    EXPECT_GT(near_outer, 60);
}

TEST(ContourOfBand, EmptyBandThrows) {
    expect_kind([] { contour_of_band(BinaryMask(8, 8, 0)); }, ErrorKind::NoEdgePixels);
}

TEST(ToPolar, PlusShapeIsUnitRadius) {
    BinaryMask m(5, 5, 0);
    m(3, 2) = m(1, 2) = m(2, 3) = m(2, 1) = 1;
    const PolarContour pc = to_polar(m);
    EXPECT_DOUBLE_EQ(pc.center_x, 2.0);
    EXPECT_DOUBLE_EQ(pc.center_y, 2.0);
    std::vector<double> alphas;
    for (const auto& p : pc.points) {
        EXPECT_DOUBLE_EQ(p.rho, 1.0);
        alphas.push_back(p.alpha);
    }
    std::sort(alphas.begin(), alphas.end());
    const double pi = std::numbers::pi;
    const std::vector<double> expected{0.0, pi / 2, pi, 3 * pi / 2};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(alphas[i], expected[i], 1e-12);
}

TEST(ToPolar, SinglePixelSitsAtCenter) {
    BinaryMask m(3, 3, 0);
    m(1, 2) = 1;
    const PolarContour pc = to_polar(m);
    ASSERT_EQ(pc.points.size(), 1u);
    EXPECT_EQ(pc.points[0].rho, 0.0);
    EXPECT_EQ(pc.points[0].alpha, 0.0);
}

TEST(ToPolar, CircleRadiiAndCenteredOffsets) {
    BinaryMask circle(32, 32, 0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) circle(x, y) = std::hypot(x - 16.0, y - 16.0) <= 10.0 ? 1 : 0;
    const PolarContour pc = to_polar(contour_of_band(circle));
    double sx = 0.0, sy = 0.0;
    for (const auto& p : pc.points) {
        EXPECT_GE(p.rho, 9.0);
        EXPECT_LE(p.rho, 11.0);
        sx += p.rho * std::cos(p.alpha);
        sy += p.rho * std::sin(p.alpha);
    }
    EXPECT_NEAR(sx / pc.points.size(), 0.0, 1e-9);
    EXPECT_NEAR(sy / pc.points.size(), 0.0, 1e-9);
}

TEST(BinByRay, WraparoundMembership) {
    PolarContour pc;
    pc.points = {{1.0, 0.05}};
    auto bins = bin_by_ray(pc, 4, 0.1);
    EXPECT_EQ(bins[0].member_distances.size(), 1u);
    for (int j = 1; j < 4; ++j) EXPECT_TRUE(bins[j].member_distances.empty());

    pc.points = {{1.0, kTwoPi - 0.05}};
    bins = bin_by_ray(pc, 4, 0.1);
    EXPECT_EQ(bins[0].member_distances.size(), 1u);
    EXPECT_NEAR(bins[2].theta, std::numbers::pi, 1e-15);
}

TEST(BinByRay, DenseCircleFillsEveryBin) {
    const PolarContour pc = to_polar(contour_of_band(binarize(annulus(10, 15))));
    for (const auto& bin : bin_by_ray(pc, 8, 0.1)) EXPECT_FALSE(bin.member_distances.empty()) << bin.index;
}

TEST(SplitInnerOuter, DirectRule) {
    RayBin bin{0, 0.0, {10.0, 10.5, 15.2}};
    auto split = split_inner_outer(bin, 2.0);
    EXPECT_EQ(split.inner, (std::vector<double>{10.0, 10.5}));
    EXPECT_EQ(split.outer, (std::vector<double>{15.2}));

    bin.member_distances = {10.0, 11.9};
    split = split_inner_outer(bin, 2.0);
    EXPECT_EQ(split.inner.size(), 2u);
    EXPECT_TRUE(split.outer.empty());

    expect_kind([] { split_inner_outer(RayBin{}, 2.0); }, ErrorKind::EmptyRay);
}

TEST(SplitInnerOuter, MatchesDirectRuleOnRandomBins) {
    CounterRng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        RayBin bin;
        const int n = 1 + static_cast<int>(rng.below(12));
        for (int k = 0; k < n; ++k) bin.member_distances.push_back(rng.uniform(5.0, 20.0));
        const double delta = rng.uniform(0.5, 4.0);
        const auto split = split_inner_outer(bin, delta);
        double lo = 1e300;
        for (double d : bin.member_distances) lo = std::min(lo, d);
        std::size_t inner = 0;
        for (double d : bin.member_distances) inner += d - lo < delta;
        EXPECT_EQ(split.inner.size(), inner);
        EXPECT_EQ(split.outer.size(), bin.member_distances.size() - inner);
    }
}

TEST(PhdExact, AnnulusThicknessWithinOnePixel) {
    const PhdResult r = phd_exact(annulus(10, 15), rays(100));
    EXPECT_NEAR(r.value, 5.0, 1.0);
    EXPECT_LE(r.rays_used, 100);
    EXPECT_EQ(r.rays.size(), 100u);
}

TEST(PhdExact, ValueIsMaxOverUsedRaysOnly) {
    const PhdResult r = phd_exact(annulus(12, 20), rays(16));
    double best = -1e300;
    int used = 0;
    for (const auto& d : r.rays) {
        if (d.used) {
            best = std::max(best, d.gap);
            ++used;
        } else {
            EXPECT_TRUE(std::isnan(d.gap));
        }
    }
    EXPECT_EQ(r.value, best);
    EXPECT_EQ(r.rays_used, used);
}

TEST(PhdExact, ConcentricSquaresMatchStarOracle) {
    BandSpec spec{64, 64, 32.0, 32.0, [](double t) { return square_radius(8.0, t); },
                  [](double t) { return square_radius(12.0, t); }};
    const double expected = phd_oracle_star(spec.r_inner, spec.r_outer, 8);
    EXPECT_NEAR(expected, 4.0 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(phd_exact(to_soft(gen_band(spec)), rays(8)).value, expected, 1.5);
}

TEST(PhdExact, TranslationInvariant) {
    BandSpec a = BandSpec::annulus(9, 14, 64);
    BandSpec b = a;
    b.cx += 5;
    b.cy -= 3;
    EXPECT_DOUBLE_EQ(phd_exact(to_soft(gen_band(a))).value, phd_exact(to_soft(gen_band(b))).value);
}

TEST(PhdExact, RayCountRobustOnStarBands) {
    BandSpec ellipse{64, 64, 32.0, 32.0, [](double) { return 9.0; },
                     [](double t) { return 14.0 / std::sqrt(std::pow(std::cos(t), 2) + std::pow(1.4 * std::sin(t), 2)) + 1.5; }};
    for (const BandSpec& spec : {BandSpec::annulus(10, 15, 64), BandSpec::annulus(8, 10, 64), ellipse}) {
        const SoftMask p = to_soft(gen_band(spec));
        EXPECT_LE(std::fabs(phd_exact(p, rays(8)).value - phd_exact(p, rays(100)).value), 2.0);
    }
}

TEST(PhdExact, ErrorCases) {
    expect_kind([] { phd_exact(SoftMask(16, 16, 0.0)); }, ErrorKind::NoEdgePixels);
    // Solid disk: a single ring, every ray finds only inner intersections.
    SoftMask solid(32, 32, 0.0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) solid(x, y) = std::hypot(x - 16.0, y - 16.0) <= 8.0 ? 1.0 : 0.0;
    expect_kind([&] { phd_exact(solid); }, ErrorKind::DegeneratePrediction);
}

TEST(PhLoss, AbsoluteDeviationFromThickness) {
    EXPECT_LE(ph_loss(annulus(10, 15), 5.0), 1.0);
    EXPECT_NEAR(ph_loss(annulus(10, 15), 2.0), 3.0, 1.0);
    expect_kind([] { ph_loss(SoftMask(8, 8, 0.0), 2.0); }, ErrorKind::NoEdgePixels);
}

TEST(PhdOracleStar, SampledGaps) {
    auto in = [](double) { return 10.0; };
    auto out = [](double) { return 15.0; };
    EXPECT_EQ(phd_oracle_star(in, out, 8), 5.0);
    auto wavy = [](double t) { return 15.0 + std::cos(t); };
    EXPECT_DOUBLE_EQ(phd_oracle_star(in, wavy, 1), 6.0);
    // Ellipse inside a circle: the dense sweep bounds any sampled maximum.
    auto ell = [](double t) { return 20.0 / std::sqrt(std::pow(std::cos(t), 2) + 4.0 * std::pow(std::sin(t), 2)); };
    auto circle = [](double) { return 22.0; };
    const double sampled = phd_oracle_star(ell, circle, 8);
    EXPECT_NEAR(sampled, 12.0, 1e-9);  // rays at pi/2 and 3pi/2 hit the minor axis
    EXPECT_LE(sampled, phd_oracle_star(ell, circle, 3600) + 1e-12);
}
