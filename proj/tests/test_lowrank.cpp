#include "snowgt/errors.hpp"
#include "snowgt/lowrank.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace snowgt;
using namespace testing_support;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Rank-1 background: every frame equals `profile`.
Eigen::MatrixXd static_slice(const Eigen::VectorXd& profile, Eigen::Index frames) {
    return Eigen::VectorXd::Ones(frames) * profile.transpose();
}

// Row profile with values in [0.2, 0.6].
Eigen::VectorXd profile(std::mt19937_64& rng, Eigen::Index n) {
    return (0.2 + 0.4 * random_matrix(rng, n, 1).col(0).cwiseAbs().cwiseMin(1.0).array()).matrix();
}

double temporal_variance(const Eigen::VectorXd& trace) {
    const double mean = trace.mean();
    return (trace.array() - mean).square().mean();
}

} // namespace

TEST(SliceSvd, ZeroMatrixHasRankZero) {
    const SliceSvd s = slice_svd(Eigen::MatrixXd::Zero(5, 4));
    EXPECT_EQ(s.rank, 0u);
    EXPECT_EQ(s.thin_size(), 4u);
    EXPECT_TRUE((s.values.array() == 0.0).all());
}

TEST(SliceSvd, UnitRankOneProduct) {
    std::mt19937_64 rng(11);
    Eigen::VectorXd a = random_matrix(rng, 7, 1).col(0).normalized();
    Eigen::VectorXd b = random_matrix(rng, 5, 1).col(0).normalized();
    const SliceSvd s = slice_svd(Eigen::MatrixXd(a * b.transpose()));
    EXPECT_NEAR(s.values(0), 1.0, 1e-12);
    for (Eigen::Index l = 1; l < s.values.size(); ++l) {
        EXPECT_LT(s.values(l), 1e-12);
    }
    EXPECT_EQ(s.rank, 1u);
}

TEST(SliceSvd, RandomMatrixAgainstEigenOracle) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::MatrixXd m = random_matrix(rng, 6, 5);
        const SliceSvd s = slice_svd(m);
        const Eigen::MatrixXd rebuilt = s.left * s.values.asDiagonal() * s.right.transpose();
        EXPECT_LT(max_abs(rebuilt - m), 1e-10);

        const std::vector<double> oracle = oracle_singular_values(m);
        ASSERT_EQ(oracle.size(), static_cast<std::size_t>(s.values.size()));
        for (std::size_t l = 0; l < oracle.size(); ++l) {
            EXPECT_NEAR(s.values(static_cast<Eigen::Index>(l)), oracle[l], 1e-8);
        }
    }
}

TEST(SliceSvd, StructuralInvariants) {
    std::mt19937_64 rng(13);
    for (auto [k, n] : {std::pair{8, 5}, {5, 8}, {16, 16}, {2, 9}, {32, 4}}) {
        const Eigen::MatrixXd m = random_matrix(rng, k, n);
        const SliceSvd s = slice_svd(m);
        const auto p = std::min(k, n);
        ASSERT_EQ(s.left.rows(), k);
        ASSERT_EQ(s.left.cols(), p);
        ASSERT_EQ(s.right.rows(), n);
        ASSERT_EQ(s.right.cols(), p);
        EXPECT_LT(max_abs(s.left.transpose() * s.left - Eigen::MatrixXd::Identity(p, p)), 1e-10);
        EXPECT_LT(max_abs(s.right.transpose() * s.right - Eigen::MatrixXd::Identity(p, p)), 1e-10);
        for (Eigen::Index l = 0; l < p; ++l) {
            EXPECT_GE(s.values(l), 0.0);
            if (l > 0) {
                EXPECT_LE(s.values(l), s.values(l - 1));
            }
        }
        EXPECT_LE(s.rank, static_cast<std::size_t>(p));
    }
}

TEST(SliceSvd, SignConventionMakesLargestRightEntryPositive) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        const SliceSvd s = slice_svd(random_matrix(rng, 9, 6));
        for (Eigen::Index l = 0; l < s.right.cols(); ++l) {
            Eigen::Index pivot = 0;
            s.right.col(l).cwiseAbs().maxCoeff(&pivot);
            EXPECT_GT(s.right(pivot, l), 0.0);
        }
    }
}

TEST(SliceSvd, SignIsStableUnderNegation) {
    std::mt19937_64 rng(15);
    const Eigen::MatrixXd m = random_matrix(rng, 8, 5);
    const SliceSvd a = slice_svd(m);
    const SliceSvd b = slice_svd(Eigen::MatrixXd(-m));
    // Negating the input must flip the left vectors, never the right ones.
    EXPECT_LT(max_abs(a.right - b.right), 1e-10);
    EXPECT_LT(max_abs(a.left + b.left), 1e-10);
}

TEST(SliceSvd, NonFiniteInputNamesTheSlice) {
    SliceView view{SliceMode::horizontal, 3, 1, Eigen::MatrixXd::Zero(4, 4)};
    view.matrix(1, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        slice_svd(view);
        FAIL() << "expected NumericFailure";
    } catch (const NumericFailure& e) {
        EXPECT_NE(std::string(e.what()).find("horizontal slice 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("channel 1"), std::string::npos);
    }
}

TEST(RankProjection, LeadingTermOfRankOneSliceIsTheSlice) {
    std::mt19937_64 rng(16);
    const Eigen::MatrixXd m = random_matrix(rng, 6, 1) * random_matrix(rng, 1, 4);
    EXPECT_LT(max_abs(rank_projection(slice_svd(m), 1) - m), 1e-10);
}

TEST(RankProjection, ZeroSingularValueGivesZeroMatrix) {
    const SliceSvd s = slice_svd(Eigen::MatrixXd::Zero(4, 3));
    for (std::size_t l = 1; l <= 3; ++l) {
        EXPECT_EQ(max_abs(rank_projection(s, l)), 0.0);
    }
}

TEST(RankProjection, ProjectionsSumToTheSlice) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd m = random_matrix(rng, 10, 7);
        const SliceSvd s = slice_svd(m);
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(10, 7);
        for (std::size_t l = 1; l <= s.rank; ++l) {
            const Eigen::MatrixXd term = rank_projection(s, l);
            EXPECT_LT(slice_svd(term).values.tail(term.cols() - 1).maxCoeff(), 1e-10);
            sum += term;
        }
        EXPECT_LT(max_abs(sum - m), 1e-8);
    }
}

TEST(RankProjection, IndexOutOfRange) {
    const SliceSvd s = slice_svd(Eigen::MatrixXd::Identity(3, 3));
    EXPECT_THROW(rank_projection(s, 0), BoundsError);
    EXPECT_THROW(rank_projection(s, 4), BoundsError);
}

TEST(QRuleTest, ParseAndFormat) {
    EXPECT_EQ(QRule::parse("energy:0.999").kind, QRule::Kind::energy);
    EXPECT_DOUBLE_EQ(QRule::parse("energy:0.95").fraction, 0.95);
    EXPECT_EQ(QRule::parse("fixed:3").fixed_rank, 3u);
    EXPECT_EQ(QRule::parse(QRule::energy(0.999).to_string()).fraction, 0.999);
    EXPECT_EQ(QRule::parse(QRule::fixed(7).to_string()).fixed_rank, 7u);
    for (const char* bad : {"", "energy", "energy:", "energy:0", "energy:1.5", "fixed:0", "fixed:-2", "fixed:2.5",
                            "median:3", "energy:abc"}) {
        EXPECT_THROW(QRule::parse(bad), ParameterError) << bad;
    }
}

TEST(BandpassSpecTest, ParseAndValidate) {
    const BandpassSpec b = BandpassSpec::parse("0.0:0.1");
    EXPECT_EQ(b.low, 0.0);
    EXPECT_EQ(b.high, 0.1);
    EXPECT_EQ(BandpassSpec::parse(BandpassSpec{0.05, 0.3}.to_string()).high, 0.3);
    for (const char* bad : {"0.2:0.1", "-0.1:0.5", "0:1.5", "0.1", "a:b", ":"}) {
        EXPECT_THROW(BandpassSpec::parse(bad), ParameterError) << bad;
    }
}

TEST(ChooseQ, ClampsToValidRange) {
    std::mt19937_64 rng(18);
    const SliceSvd s = slice_svd(random_matrix(rng, 8, 6));
    ASSERT_EQ(s.rank, 6u);
    EXPECT_EQ(choose_q(s, QRule::fixed(1)), 2u);
    EXPECT_EQ(choose_q(s, QRule::fixed(4)), 4u);
    EXPECT_EQ(choose_q(s, QRule::fixed(100)), 6u);
    EXPECT_EQ(choose_q(s, QRule::energy(1.0)), 6u);

    const SliceSvd one = slice_svd(Eigen::MatrixXd::Ones(5, 4));
    EXPECT_EQ(choose_q(one, QRule::energy(0.999)), 1u);
}

TEST(ChooseQ, EnergyRuleMatchesCumulativeShare) {
    std::mt19937_64 rng(19);
    for (double fraction : {0.5, 0.9, 0.99, 0.999}) {
        const SliceSvd s = slice_svd(random_matrix(rng, 12, 9));
        double total = 0.0;
        for (Eigen::Index l = 0; l < s.values.size(); ++l) {
            total += s.values(l) * s.values(l);
        }
        std::size_t expected = 0;
        double running = 0.0;
        while (running < fraction * total) {
            running += s.values(static_cast<Eigen::Index>(expected)) * s.values(static_cast<Eigen::Index>(expected));
            ++expected;
        }
        EXPECT_EQ(choose_q(s, QRule::energy(fraction)), std::max<std::size_t>(expected, 2));
    }
}

TEST(SplitComponents, PartsSumToSliceAndBackgroundIsRankOne) {
    std::mt19937_64 rng(20);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::MatrixXd m = random_matrix(rng, 16, 12).cwiseAbs() * 0.3;
        const SliceSvd s = slice_svd(m);
        const ComponentSplit c = split_components(s, QRule::energy(0.9));
        EXPECT_LT(max_abs(c.background + c.foreground + c.noise - m), 1e-8);
        const SliceSvd b = slice_svd(c.background);
        EXPECT_LT(b.values(1), 1e-8 * b.values(0));
    }
}

TEST(SplitComponents, StaticSceneIsAllBackground) {
    std::mt19937_64 rng(21);
    const Eigen::MatrixXd m = static_slice(random_matrix(rng, 9, 1).col(0).cwiseAbs(), 12);
    const ComponentSplit c = split_components(slice_svd(m), QRule::energy(0.999));
    EXPECT_EQ(c.q, 1u);
    EXPECT_LT(max_abs(c.foreground), 1e-8);
    EXPECT_LT(max_abs(c.noise), 1e-8);
    EXPECT_LT(max_abs(c.background - m), 1e-10);
}

TEST(SplitComponents, FullRankBoundaryLeavesNoNoise) {
    std::mt19937_64 rng(22);
    const SliceSvd s = slice_svd(random_matrix(rng, 7, 5));
    const ComponentSplit c = split_components(s, s.rank);
    EXPECT_EQ(max_abs(c.noise), 0.0);
}

TEST(SplitComponents, BackgroundDoesNotDependOnQ) {
    std::mt19937_64 rng(23);
    const SliceSvd s = slice_svd(random_matrix(rng, 10, 8));
    const Eigen::MatrixXd b2 = split_components(s, 2).background;
    for (std::size_t q = 3; q <= s.rank; ++q) {
        EXPECT_EQ(split_components(s, q).background, b2);
    }
}

TEST(SplitComponents, MovingBrightPixelLandsInForeground) {
    std::mt19937_64 rng(24);
    const Eigen::Index k = 16, n = 16;
    Eigen::MatrixXd m = static_slice(profile(rng, n), k);
    for (Eigen::Index t = 0; t < k; ++t) {
        m(t, t % n) = 1.0;
    }
    const SliceSvd s = slice_svd(m);
    const ComponentSplit c = split_components(s, QRule::energy(0.999));
    const double moving = (m - c.background).squaredNorm();
    EXPECT_GE(c.foreground.squaredNorm(), 0.9 * moving);
}

TEST(SplitComponents, RejectsBadBoundary) {
    EXPECT_THROW(split_components(slice_svd(Eigen::MatrixXd::Zero(3, 3)), QRule::energy(0.9)), ParameterError);
    std::mt19937_64 rng(25);
    const SliceSvd s = slice_svd(random_matrix(rng, 4, 4));
    EXPECT_THROW(split_components(s, 5), BoundsError);
    EXPECT_THROW(split_components(s, 0), BoundsError);
}

TEST(Bandpass, BinRuleFoldsAroundNyquist) {
    const BandpassSpec low{0.0, 0.1};
    EXPECT_TRUE(bin_retained(0, 32, low));
    EXPECT_TRUE(bin_retained(1, 32, low));   // 0.0625
    EXPECT_FALSE(bin_retained(2, 32, low));  // 0.125
    EXPECT_TRUE(bin_retained(31, 32, low));
    EXPECT_FALSE(bin_retained(0, 32, BandpassSpec{0.01, 1.0}));
    EXPECT_TRUE(bin_retained(16, 32, BandpassSpec{1.0, 1.0}));
}

TEST(Bandpass, MatchesNaiveDftOracle) {
    std::mt19937_64 rng(26);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 2; k <= 33; ++k) {
        for (int trial = 0; trial < 4; ++trial) {
            double lo = u(rng), hi = u(rng);
            if (lo > hi) {
                std::swap(lo, hi);
            }
            if (trial == 0) {
                lo = 0.0;
            }
            const Eigen::VectorXd x = random_matrix(rng, static_cast<Eigen::Index>(k), 1).col(0);
            const std::vector<double> expected = oracle_bandpass(to_std(x), lo, hi);
            const Eigen::VectorXd got = ideal_bandpass(x, BandpassSpec{lo, hi});
            for (std::size_t i = 0; i < k; ++i) {
                ASSERT_NEAR(got(static_cast<Eigen::Index>(i)), expected[i], 1e-12) << "k=" << k;
            }
        }
    }
}

TEST(Bandpass, FullBandIsIdentity) {
    std::mt19937_64 rng(27);
    const SliceSvd s = slice_svd(random_matrix(rng, 12, 8));
    const SliceSvd f = filter_left_vectors(s, s.rank, BandpassSpec{0.0, 1.0});
    EXPECT_LT(max_abs(f.left - s.left), 1e-10);
}

TEST(Bandpass, ZeroBandKeepsOnlyTheMean) {
    std::mt19937_64 rng(28);
    const SliceSvd s = slice_svd(random_matrix(rng, 12, 8));
    const SliceSvd f = filter_left_vectors(s, 5, BandpassSpec{0.0, 0.0});
    for (Eigen::Index l = 1; l < 5; ++l) {
        const double mean = s.left.col(l).mean();
        EXPECT_LT((f.left.col(l).array() - mean).abs().maxCoeff(), 1e-12);
    }
}

TEST(Bandpass, HighFrequencySinusoidIsRemoved) {
    // 0.8 x Nyquist lands exactly on bin 8 of a length-20 signal.
    const Eigen::Index k = 20;
    Eigen::VectorXd x(k);
    for (Eigen::Index t = 0; t < k; ++t) {
        x(t) = std::cos(std::numbers::pi * 0.8 * static_cast<double>(t) + 0.3);
    }
    EXPECT_LT(ideal_bandpass(x, BandpassSpec{0.0, 0.1}).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((ideal_bandpass(x, BandpassSpec{0.7, 0.9}) - x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Bandpass, OnlyForegroundVectorsAreFiltered) {
    std::mt19937_64 rng(29);
    const SliceSvd s = slice_svd(random_matrix(rng, 16, 10));
    const std::size_t q = 4;
    const SliceSvd f = filter_left_vectors(s, q, BandpassSpec{0.0, 0.1});
    EXPECT_EQ(f.left.col(0), s.left.col(0));
    for (Eigen::Index l = static_cast<Eigen::Index>(q); l < s.left.cols(); ++l) {
        EXPECT_EQ(f.left.col(l), s.left.col(l));
    }
    EXPECT_NE(f.left.col(1), s.left.col(1));
    EXPECT_THROW(filter_left_vectors(s, s.rank + 1, BandpassSpec{}), BoundsError);
}

TEST(DesnowSlice, IdentityFilterReproducesSlice) {
    std::mt19937_64 rng(30);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd m = random_matrix(rng, 12, 9);
        const SliceSvd s = slice_svd(m);
        for (std::size_t q = 1; q <= s.rank; ++q) {
            EXPECT_LT(max_abs(desnow_slice(s, q, BandpassSpec{0.0, 1.0}) - m), 1e-8);
        }
    }
}

TEST(DesnowSlice, StaticSliceUnchangedForAnyBand) {
    std::mt19937_64 rng(31);
    const Eigen::MatrixXd m = static_slice(random_matrix(rng, 8, 1).col(0).cwiseAbs(), 10);
    const SliceSvd s = slice_svd(m);
    for (BandpassSpec b : {BandpassSpec{0, 0}, BandpassSpec{0, 0.1}, BandpassSpec{0.5, 1.0}}) {
        EXPECT_LT(max_abs(desnow_slice(s, choose_q(s, QRule::energy(0.999)), b) - m), 1e-10);
    }
}

TEST(DesnowSlice, ZeroSlicePassesThrough) {
    const SliceSvd s = slice_svd(Eigen::MatrixXd::Zero(6, 4));
    EXPECT_EQ(max_abs(desnow_slice(s, 0, BandpassSpec{})), 0.0);
}

TEST(DesnowSlice, NyquistBlinkIsSuppressed) {
    // Leakage through the background vector shrinks roughly as 1/width, so
    // use a row as wide as a small frame rather than a toy slice.
    std::mt19937_64 rng(32);
    const Eigen::Index k = 16, n = 128, j = 37;
    Eigen::MatrixXd m = static_slice(profile(rng, n), k);
    for (Eigen::Index t = 0; t < k; t += 2) {
        m(t, j) += 0.3;
    }
    const SliceSvd s = slice_svd(m);
    const Eigen::MatrixXd out = desnow_slice(s, choose_q(s, QRule::energy(0.999)), BandpassSpec{0.0, 0.2});
    const double before = std::sqrt(temporal_variance(m.col(j)));
    const double after = std::sqrt(temporal_variance(out.col(j)));
    EXPECT_LE(after, 0.05 * before) << before << " -> " << after;
}

TEST(DesnowSlice, ShrinkingTheBandNeverRaisesForegroundVariance) {
    std::mt19937_64 rng(33);
    std::uniform_int_distribution<int> bin(1, 16);
    const Eigen::Index k = 32, n = 10;
    const std::vector<BandpassSpec> nested{{0.0, 1.0}, {0.0, 0.8}, {0.05, 0.6}, {0.1, 0.4}, {0.2, 0.3}, {0.25, 0.25}};
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd m = static_slice(random_matrix(rng, n, 1).col(0).cwiseAbs(), k);
        const Eigen::VectorXd weights = random_matrix(rng, n, 1).col(0);
        const int b0 = bin(rng);
        for (Eigen::Index t = 0; t < k; ++t) {
            m.row(t) += 0.2 * std::sin(2.0 * std::numbers::pi * b0 * static_cast<double>(t) / k) * weights.transpose();
        }
        const SliceSvd s = slice_svd(m);
        const std::size_t q = choose_q(s, QRule::energy(0.999));
        const Eigen::MatrixXd background = rank_projection(s, 1);
        std::vector<double> previous(n, std::numeric_limits<double>::infinity());
        for (const BandpassSpec& band : nested) {
            const Eigen::MatrixXd fg = desnow_slice(s, q, band, true) - background;
            for (Eigen::Index c = 0; c < n; ++c) {
                const double v = temporal_variance(fg.col(c));
                EXPECT_LE(v, previous[static_cast<std::size_t>(c)] + 1e-12);
                previous[static_cast<std::size_t>(c)] = v;
            }
        }
    }
}

TEST(DesnowVideo, StaticVideoUnchanged) {
    std::mt19937_64 rng(34);
    const Image frame = random_image(rng, 9, 11, 3);
    const std::vector<Image> frames(8, frame);
    const VideoTensor t = VideoTensor::from_frames(frames);
    for (SliceMode mode : {SliceMode::horizontal, SliceMode::lateral}) {
        DesnowOptions o;
        o.mode = mode;
        EXPECT_EQ(max_quantized_diff(desnow_video(t, o), t), 0);
    }
}

TEST(DesnowVideo, IdentityBandReproducesInputForAllRules) {
    std::mt19937_64 rng(35);
    for (const QRule& rule : {QRule::energy(0.5), QRule::energy(0.999), QRule::fixed(2), QRule::fixed(6)}) {
        for (SliceMode mode : {SliceMode::horizontal, SliceMode::lateral}) {
            const VideoTensor t = random_video(rng, 7, 9, 10, 3);
            DesnowOptions o{mode, rule, BandpassSpec{0.0, 1.0}, false, true};
            EXPECT_EQ(max_quantized_diff(desnow_video(t, o), t), 0) << rule.to_string();
        }
    }
}

TEST(DesnowVideo, SerialAndParallelAreBitIdentical) {
    std::mt19937_64 rng(36);
    const VideoTensor t = random_video(rng, 13, 10, 12, 3);
    for (SliceMode mode : {SliceMode::horizontal, SliceMode::lateral}) {
        DesnowOptions o;
        o.mode = mode;
        o.parallel = false;
        const VideoTensor serial = desnow_video(t, o);
        o.parallel = true;
        EXPECT_EQ(desnow_video(t, o), serial);
        EXPECT_EQ(desnow_video(t, o), serial);
    }
}

TEST(DesnowVideo, DropNoiseDiffersOnlyByNoiseTerm) {
    std::mt19937_64 rng(37);
    const VideoTensor t = random_video(rng, 6, 6, 8);
    DesnowOptions a{SliceMode::horizontal, QRule::fixed(2), BandpassSpec{0.0, 1.0}, false, true};
    DesnowOptions b = a;
    b.drop_noise = true;
    EXPECT_GT(max_abs_diff(desnow_video(t, a), desnow_video(t, b)), 1e-3);
}

TEST(DesnowVideo, ShortVideoWarnsButRuns) {
    std::mt19937_64 rng(38);
    const VideoTensor t = random_video(rng, 5, 5, 3);
    DesnowDiagnostics diag;
    const VideoTensor out = desnow_video(t, {}, &diag);
    EXPECT_EQ(out.frames(), 3u);
    ASSERT_EQ(diag.warnings.size(), 1u);
    EXPECT_EQ(diag.slices, 5u);
    EXPECT_EQ(diag.q_per_slice.size(), 5u);

    DesnowDiagnostics quiet;
    desnow_video(random_video(rng, 5, 5, 4), {}, &quiet);
    EXPECT_TRUE(quiet.warnings.empty());
}

TEST(DesnowVideo, FrontalModeRejected) {
    std::mt19937_64 rng(39);
    DesnowOptions o;
    o.mode = SliceMode::frontal;
    EXPECT_THROW(desnow_video(random_video(rng, 4, 4, 4), o), ParameterError);
}

TEST(DesnowVideo, OutputStaysInUnitRange) {
    std::mt19937_64 rng(40);
    const VideoTensor out = desnow_video(random_video(rng, 8, 8, 16, 3));
    for (double v : out.values()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
    }
}
