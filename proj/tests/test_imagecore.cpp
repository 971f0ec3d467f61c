#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "edgeps/components.hpp"
#include "edgeps/convolve.hpp"
#include "edgeps/distance_transform.hpp"
#include "edgeps/edge_extract.hpp"
#include "edgeps/pgm.hpp"
#include "oracles.hpp"

using namespace edgeps;

namespace {

BinaryMask centered_square(int size, int side) {
    BinaryMask m(size, size, 0);
    const int lo = (size - side) / 2;
    for (int y = lo; y < lo + side; ++y)
        for (int x = lo; x < lo + side; ++x) m(x, y) = 1;
    return m;
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / ("edgeps_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Raster, RejectsMismatchedData) {
    EXPECT_THROW(Raster<int>(2, 2, std::vector<int>{1, 2, 3}), Error);
}

TEST(LabelMap, EnforcesIdRange) {
    EXPECT_THROW(LabelMap(Raster<int>(2, 1, std::vector<int>{0, 3}), 3), Error);
    EXPECT_NO_THROW(LabelMap(Raster<int>(2, 1, std::vector<int>{0, 255}), 3));
}

TEST(Convolve, UniformRegionsRespondWithZero) {
    const EdgeKernel k(2);
    const auto ones = convolve_same(BinaryMask(8, 8, 1), k);
    const auto zeros = convolve_same(BinaryMask(8, 8, 0), k);
    for (std::size_t i = 0; i < ones.size(); ++i) {
        EXPECT_EQ(ones[i], 0);
        EXPECT_EQ(zeros[i], 0);
    }
}

TEST(Convolve, SquareRespondsOnTwoRingsAroundItsBoundary) {
    const BinaryMask square = centered_square(16, 8);
    const auto response = convolve_same(square, EdgeKernel(1));
    EXPECT_EQ(response, oracle::convolve(square, oracle::cross_kernel(1)));

    // Inner ring: 28 pixels, all positive. Outer ring: the 32 pixels 4-adjacent
    // to the square, all negative. Diagonal corners outside respond 0.
    int positive = 0, negative = 0;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const int r = response(x, y);
            const bool inside = x >= 4 && x < 12 && y >= 4 && y < 12;
            const bool inner_ring = inside && (x == 4 || x == 11 || y == 4 || y == 11);
            if (r > 0) {
                ++positive;
                EXPECT_TRUE(inner_ring);
            } else if (r < 0) {
                ++negative;
                EXPECT_FALSE(inside);
            }
        }
    EXPECT_EQ(positive, 28);
    EXPECT_EQ(negative, 32);
}

TEST(Convolve, MatchesDirectCorrelationOnRandomMasks) {
    CounterRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = 1 + static_cast<int>(rng.below(16));
        const int h = 1 + static_cast<int>(rng.below(16));
        const int d = 1 + static_cast<int>(rng.below(4));
        const BinaryMask m = oracle::random_mask(rng, w, h, rng.uniform());
        ASSERT_EQ(convolve_same(m, EdgeKernel(d)), oracle::convolve(m, oracle::cross_kernel(d)));
    }
}

TEST(Convolve, RejectsEvenKernelAndEmptyMask) {
    EXPECT_THROW(convolve_same(BinaryMask(4, 4, 1), Raster<int>(2, 2, 1)), Error);
    try {
        convolve_same(BinaryMask(), EdgeKernel(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    }
}

TEST(Convolve, AdjointMatchesInnerProductIdentity) {
    // <K x, g> == <x, K^T g> for random real x, g.
    CounterRng rng(5);
    const EdgeKernel k(2);
    Raster<double> x(9, 7), g(9, 7);
    for (auto& v : x.pixels()) v = rng.uniform(-1, 1);
    for (auto& v : g.pixels()) v = rng.uniform(-1, 1);
    const auto kx = correlate_replicate<double>(x, k.weights());
    const auto ktg = correlate_replicate_adjoint(g, k.weights());
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lhs += kx[i] * g[i];
        rhs += x[i] * ktg[i];
    }
    EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(ExactEdt, RowOfDistances) {
    BinaryMask m(5, 1, 0);
    m(0, 0) = 1;
    const auto d = exact_edt(m);
    for (int x = 0; x < 5; ++x) EXPECT_DOUBLE_EQ(d(x, 0), x);
}

TEST(ExactEdt, PythagoreanTriple) {
    BinaryMask m(4, 5, 0);
    m(0, 0) = 1;
    EXPECT_DOUBLE_EQ(exact_edt(m)(3, 4), 5.0);
}

TEST(ExactEdt, EmptySourceSetThrows) {
    try {
        exact_edt(BinaryMask(3, 3, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptySourceSet);
    }
}

TEST(ExactEdt, MatchesBruteForceOnRandomMasks) {
    CounterRng rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = 1 + static_cast<int>(rng.below(32));
        const int h = 1 + static_cast<int>(rng.below(32));
        BinaryMask m = oracle::random_mask(rng, w, h, 0.02 + 0.3 * rng.uniform());
        m(static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h))) = 1;
        const auto fast = exact_edt(m);
        const auto slow = oracle::edt(m);
        for (std::size_t i = 0; i < m.size(); ++i) ASSERT_NEAR(fast[i], slow[i], 1e-12);
    }
}

TEST(ExactEdt, IsOneLipschitzBetweenNeighbours) {
    CounterRng rng(13);
    const BinaryMask m = oracle::random_mask(rng, 24, 24, 0.05);
    const auto d = exact_edt(m);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x + 1 < 24; ++x) {
            EXPECT_LE(std::fabs(d(x, y) - d(x + 1, y)), 1.0 + 1e-12);
            if (m(x, y)) EXPECT_EQ(d(x, y), 0.0);
        }
}

TEST(Components, CountsAndLabels) {
    EXPECT_EQ(connected_components(BinaryMask(5, 5, 0), Connectivity::Four).count, 0);
    BinaryMask two(6, 3, 0);
    for (int y = 0; y < 2; ++y) {
        two(0, y) = two(1, y) = 1;
        two(4, y) = two(5, y) = 1;
    }
    const auto cc = connected_components(two, Connectivity::Eight);
    EXPECT_EQ(cc.count, 2);
    EXPECT_EQ(cc.ids(0, 0), 0);
    EXPECT_EQ(cc.ids(5, 1), 1);
}

TEST(Components, DiagonalTouchDependsOnConnectivity) {
    BinaryMask m(2, 2, 0);
    m(0, 0) = m(1, 1) = 1;
    EXPECT_EQ(connected_components(m, Connectivity::Four).count, 2);
    EXPECT_EQ(connected_components(m, Connectivity::Eight).count, 1);
}

TEST(Components, MatchesFloodFillOnRandomMasks) {
    CounterRng rng(14);
    for (int trial = 0; trial < 40; ++trial) {
        const BinaryMask m = oracle::random_mask(rng, 16, 16, 0.45);
        for (bool eight : {false, true}) {
            Raster<int> expected;
            const int n = oracle::flood_fill_count(m, eight, expected);
            const auto cc = connected_components(m, eight ? Connectivity::Eight : Connectivity::Four);
            ASSERT_EQ(cc.count, n);
            // Same partition: both scan in raster order, so ids coincide.
            ASSERT_EQ(cc.ids, expected);
        }
    }
}

TEST(Pgm, LabelMapRoundTrip) {
    const auto dir = temp_dir();
    const LabelMap labels(Raster<int>(3, 3, std::vector<int>{0, 1, 2, 2, 255, 0, 1, 1, 0}), 3);
    save_pgm(labels, dir / "l.pgm");
    EXPECT_EQ(load_label_map(dir / "l.pgm", 3), labels);
    save_pgm(labels, dir / "l2.pgm", PgmEncoding::Ascii);
    EXPECT_EQ(load_label_map(dir / "l2.pgm", 3), labels);
}

TEST(Pgm, AsciiAndBinaryDecodeIdentically) {
    const std::string p2 = "P2\n# comment\n3 2\n255\n0 1 2\n2 1 0\n";
    std::string p5 = "P5 3 2 255\n";
    for (char c : {0, 1, 2, 2, 1, 0}) p5.push_back(c);
    EXPECT_EQ(to_label_map(parse_pgm(p2)), to_label_map(parse_pgm(p5)));
}

TEST(Pgm, SixteenBitSoftMaskRoundTrip) {
    CounterRng rng(3);
    SoftMask m(7, 5);
    for (auto& v : m.pixels()) v = quantized(rng.uniform());
    const PgmImage encoded = from_soft_mask(m);
    EXPECT_EQ(encoded.maxval, kSoftScale);
    EXPECT_EQ(to_soft_mask(parse_pgm(encode_pgm(encoded))), m);
    // Off-grid values come back within half a quantization step.
    SoftMask raw(3, 1, std::vector<double>{0.1234567, 0.5, 0.9999});
    const SoftMask back = to_soft_mask(parse_pgm(encode_pgm(from_soft_mask(raw))));
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(back[i], raw[i], 0.5 / kSoftScale + 1e-15);
}

TEST(Pgm, EncodingIsStableUnderReload) {
    // save(load(bytes)) reproduces the original bytes for canonical P5 files.
    PgmImage img{4, 2, 65535, {0, 1, 256, 65535, 7, 8, 9, 10}};
    const std::string bytes = encode_pgm(img);
    EXPECT_EQ(encode_pgm(parse_pgm(bytes)), bytes);
}

TEST(Pgm, MalformedInputsAreFormatErrors) {
    auto kind_of = [](const std::string& bytes) {
        try {
            parse_pgm(bytes);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidInput;
    };
    EXPECT_EQ(kind_of("P6\n1 1\n255\n\x01"), ErrorKind::FormatError);
    EXPECT_EQ(kind_of("P5\n2 2\n0\n\x01\x01\x01\x01"), ErrorKind::FormatError);
    EXPECT_EQ(kind_of("P5\n2 2\n255\n\x01\x01"), ErrorKind::FormatError);  // truncated
    EXPECT_EQ(kind_of("P2\n2 2\n255\n1 2 3"), ErrorKind::FormatError);       // truncated
    EXPECT_EQ(kind_of("P2\n1 1\n10\n11\n"), ErrorKind::FormatError);         // above maxval
    EXPECT_EQ(kind_of("P2\nx 1\n10\n1\n"), ErrorKind::FormatError);
    EXPECT_THROW(read_pgm("/nonexistent/file.pgm"), Error);
}
