#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "anycs/baselines.hpp"
#include "anycs/catoni.hpp"

using namespace anycs;

namespace {

std::vector<double> draws(std::uint64_t seed, std::size_t n, double mu = 0.0, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(mu, sd);
    std::vector<double> xs(n);
    for (auto& x : xs) x = d(rng);
    return xs;
}

}  // namespace

TEST(Chebyshev, Values) {
    auto a = chebyshev_ci(4, 0.0, 4.0, 0.25);
    EXPECT_DOUBLE_EQ(a.lo, -2.0);
    EXPECT_DOUBLE_EQ(a.hi, 2.0);
    auto b = chebyshev_ci(100, 1.0, 1.0, 0.01);
    EXPECT_DOUBLE_EQ(b.lo, 0.0);
    EXPECT_DOUBLE_EQ(b.hi, 2.0);
    auto c = chebyshev_ci(1, 0.0, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(c.lo, -1.0);
    EXPECT_DOUBLE_EQ(c.hi, 1.0);
}

TEST(Chernoff, Values) {
    const double e = std::exp(1.0);
    auto a = chernoff_ci(2, 0.0, 1.0, 2.0 / (e * e));
    EXPECT_NEAR(a.hi, std::sqrt(2.0), 1e-15);
    auto b = chernoff_ci(8, 0.0, 1.0, 2.0 / e);
    EXPECT_NEAR(b.hi, 0.5, 1e-15);
    auto c = chernoff_ci(250, 0.0, 25.0, 0.05);
    EXPECT_NEAR(c.hi, 5.0 * std::sqrt(2.0 * std::log(40.0) / 250.0), 1e-15);
}

TEST(NormalMixture, Values) {
    auto a = normal_mixture_cs(1, 0.5, 1.0, 2.0);
    EXPECT_NEAR(a.hi - 0.5, std::sqrt(2.0 * std::log(2.0)), 1e-15);
    auto b = normal_mixture_cs(100, 0.0, 1.0, 0.05);
    EXPECT_NEAR(b.hi, std::sqrt(101.0 * std::log(404.0 / 0.0025)) / 100.0, 1e-15);
}

TEST(NormalMixture, ShrinksLikeRootLogTOverT) {
    const double h6 = normal_mixture_cs(1000000, 0.0, 1.0, 0.05).hi;
    const double h5 = normal_mixture_cs(100000, 0.0, 1.0, 0.05).hi;
    const double rate = [](double t) { return std::sqrt(std::log(t) / t); }(1e6) /
                        [](double t) { return std::sqrt(std::log(t) / t); }(1e5);
    EXPECT_NEAR((h6 / h5) / rate, 1.0, 0.05);
}

TEST(PmHoeffding, SingleObservation) {
    StreamState st;
    st.update(1.0, {1, 0.0});
    auto i = pm_hoeffding_cs(st, 1.0, 2.0 / std::exp(1.0));
    EXPECT_NEAR(i.lo, -1.5, 1e-15);
    EXPECT_NEAR(i.hi, 1.5, 1e-15);
}

TEST(PmHoeffding, ConstantLambdaCentersOnSampleMean) {
    const auto xs = draws(1, 64, 2.0);
    StreamState st;
    double sum = 0;
    for (std::size_t t = 1; t <= xs.size(); ++t) {
        st.update(0.2, {t, xs[t - 1]});
        sum += xs[t - 1];
    }
    auto i = pm_hoeffding_cs(st, 1.0, 0.05);
    EXPECT_NEAR(0.5 * (i.lo + i.hi), sum / 64.0, 1e-12);
}

TEST(StitchedSubGaussian, EnvelopeRatioAndValue) {
    for (std::size_t t : {2u, 10u, 1024u, 100000u})
        for (double a : {0.1, 0.05, 1e-4}) {
            const double h = stitched_subgaussian_cs(t, 0.0, a).hi;
            EXPECT_NEAR(h / stitched_boundary(t, a), 0.25, 1e-14);
        }
    const double expect = 1.7 * std::sqrt((std::log(std::log(2048.0)) + 0.72 * std::log(208.0)) / 1024.0);
    EXPECT_NEAR(stitched_subgaussian_cs(1024, 0.0, 0.05).hi, expect, 1e-15);
}

TEST(StitchedSubGaussian, DecreasingInT) {
    double prev = stitched_subgaussian_cs(2, 0.0, 0.05).hi;
    for (std::size_t t = 3; t < 20000; ++t) {
        const double h = stitched_subgaussian_cs(t, 0.0, 0.05).hi;
        ASSERT_LT(h, prev) << t;
        prev = h;
    }
}

TEST(TrivialCatoni, Levels) {
    EXPECT_DOUBLE_EQ(trivial_catoni_level(1, 0.05), 0.025);
    double sum = 0;
    for (std::size_t t = 1; t <= 100000; ++t) sum += trivial_catoni_level(t, 0.05);
    EXPECT_NEAR(sum, 0.05 * (1.0 - 1.0 / 100001.0), 1e-12);
}

TEST(TrivialCatoni, UndefinedEarlyTimesGiveWholeLine) {
    const auto xs = draws(2, 50);
    EXPECT_EQ(trivial_catoni_cs(xs, 5, 1.0, 0.05), ConfidenceSet::real_line());
    EXPECT_TRUE(std::isfinite(trivial_catoni_cs(xs, 50, 1.0, 0.05).width()));
}

TEST(CatoniCi, LevelTooSmall) {
    const auto xs = draws(3, 10);
    EXPECT_THROW(catoni_ci(xs, 5, 1.0, 0.05), ConfigError);
    EXPECT_NO_THROW(catoni_ci(xs, 10, 1.0, 0.05));
}

TEST(CatoniCi, NegationSymmetry) {
    auto xs = draws(4, 100, 0.7, 2.0);
    const auto a = catoni_ci(xs, 100, 4.0, 0.05);
    for (auto& x : xs) x = -x;
    const auto b = catoni_ci(xs, 100, 4.0, 0.05);
    EXPECT_NEAR(b.lower(), -a.upper(), 1e-8);
    EXPECT_NEAR(b.upper(), -a.lower(), 1e-8);
}

TEST(CatoniCi, NarrowerThanCatoniSequence) {
    int narrower = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto xs = draws(100 + seed, 250, 0.0, 5.0);
        CsConfig c;
        c.sigma2 = 25.0;
        CatoniEstimator cs(c, LambdaSchedule::catoni_tuned(0.05, 25.0));
        for (std::size_t t = 1; t <= xs.size(); ++t) cs.update({t, xs[t - 1]});
        narrower += catoni_ci(xs, 250, 25.0, 0.05).width() <= cs.set().width();
    }
    EXPECT_EQ(narrower, 50);
}

TEST(CatoniCi, OverlapsChernoffAtFigureSetting) {
    std::vector<double> ratios;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto xs = draws(200 + seed, 250, 0.0, 5.0);
        const double w = catoni_ci(xs, 250, 25.0, 0.05).width();
        ratios.push_back(w / (2.0 * chernoff_ci(250, 0.0, 25.0, 0.05).hi));
    }
    std::sort(ratios.begin(), ratios.end());
    EXPECT_NEAR(0.5 * (ratios[24] + ratios[25]), 1.0, 0.10);
}

TEST(Baselines, ChebyshevOverChernoffGrowsAsAlphaShrinks) {
    double prev = 0;
    for (int k = 1; k <= 8; ++k) {
        const double a = std::pow(10.0, -k);
        const double r = chebyshev_ci(100, 0, 1, a).hi / chernoff_ci(100, 0, 1, a).hi;
        EXPECT_GT(r, prev);
        prev = r;
    }
    EXPECT_GT(prev, 100.0);
}

TEST(Baselines, Metadata) {
    EXPECT_EQ(baseline_info(BaselineKind::chebyshev_ci).assumption, Assumption::finite_variance);
    EXPECT_FALSE(baseline_info(BaselineKind::chebyshev_ci).sequential);
    EXPECT_EQ(baseline_info(BaselineKind::normal_mixture_cs).assumption, Assumption::subgaussian);
    EXPECT_TRUE(baseline_info(BaselineKind::trivial_catoni_cs).sequential);
}
