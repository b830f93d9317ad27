#include <doctest.h>

#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>

#include "spad/intervals.hpp"
#include "spad/model.hpp"
#include "spad/simulate.hpp"
#include "test_helpers.hpp"

using namespace spad;

namespace {

IntervalHistogram from_gaps(std::initializer_list<std::uint64_t> gaps, std::uint64_t m_max) {
    std::vector<std::uint64_t> v(gaps);
    return build_histogram(v, m_max);
}

}  // namespace

TEST_CASE("extract_intervals basics") {
    EventStream s;
    s.gates = {3, 5, 10, 11};
    CHECK(extract_intervals(s) == std::vector<std::uint64_t>{2, 5, 1});

    s.gates = {7};
    CHECK(extract_intervals(s).empty());
    s.gates = {};
    CHECK(extract_intervals(s).empty());

    s.gates = {5, 5};
    CHECK_THROWS_AS(extract_intervals(s), std::invalid_argument);
    s.gates = {5, 4};
    CHECK_THROWS_AS(extract_intervals(s), std::invalid_argument);
}

TEST_CASE("extract_intervals on simulator output") {
    SimConfig c;
    c.params = DetectorParams::from_reduced(0.03, 1e-4, 0.02, 0.3);
    c.stop = StopCondition::detections(100000);
    c.seed = 3;
    const EventStream s = simulate_stream(c);
    const auto gaps = extract_intervals(s);
    REQUIRE(gaps.size() == 99999);
    for (std::uint64_t g : gaps) {
        CHECK(g >= 1);
    }
}

TEST_CASE("histogram counts, overflow, and exact normalization") {
    IntervalHistogram h = from_gaps({1, 1, 2}, 10);
    CHECK(h.count(1) == 2);
    CHECK(h.count(2) == 1);
    CHECK(h.overflow() == 0);
    CHECK(h.total() == 3);
    CHECK(h.empirical_pmf(1) == doctest::Approx(2.0 / 3.0));
    CHECK(h.empirical_pmf(2) == doctest::Approx(1.0 / 3.0));

    h = from_gaps({5}, 3);
    CHECK(h.overflow() == 1);
    CHECK(h.total() == 1);

    CHECK_THROWS_AS(IntervalHistogram(0), std::invalid_argument);
    IntervalHistogram bad(4);
    CHECK_THROWS_AS(bad.record(0), std::invalid_argument);

    // integer identity: total == overflow + sum of counts, on random input
    std::mt19937_64 rng(9);
    IntervalHistogram r(50);
    std::uint64_t recorded = 0;
    for (int i = 0; i < 20000; ++i) {
        r.record(1 + rng() % 80);
        ++recorded;
    }
    std::uint64_t sum = 0;
    for (std::uint64_t m = 1; m <= r.m_max(); ++m) {
        sum += r.count(m);
    }
    CHECK(sum + r.overflow() == r.total());
    CHECK(r.total() == recorded);
}

TEST_CASE("histogram of a long simulated run matches model expectations") {
    DetectorParams p = DetectorParams::from_reduced(0.012, 0.0, 0.0185, 0.25);
    SimConfig c;
    c.params = p;
    c.stop = StopCondition::detections(2000001);
    c.seed = 1234;
    const auto gaps = extract_intervals(simulate_stream(c));
    const IntervalHistogram hist = build_histogram(gaps, 10000);
    CHECK(hist.total() == 2000000);

    const IntervalModel im = IntervalModel::from_params(p);
    const std::vector<double> pmf = im.pmf_prefix(hist.m_max(), PmfMode::ExactProduct);
    const double n = static_cast<double>(hist.total());
    std::uint64_t tested = 0, beyond = 0;
    for (std::uint64_t m = 1; m <= hist.m_max(); ++m) {
        const double expected = n * pmf[m - 1];
        if (expected < 25.0) {
            continue;
        }
        const double z = (static_cast<double>(hist.count(m)) - expected) /
                         std::sqrt(expected * (1.0 - pmf[m - 1]));
        ++tested;
        if (std::abs(z) > 3.0) {
            ++beyond;
        }
    }
    REQUIRE(tested > 200);
    CHECK(static_cast<double>(beyond) / static_cast<double>(tested) < 0.01);
}

TEST_CASE("merge is identity with empty, commutative, associative") {
    const IntervalHistogram a = from_gaps({1, 2, 2, 7, 30}, 20);
    const IntervalHistogram b = from_gaps({2, 3, 25}, 20);
    const IntervalHistogram c = from_gaps({1, 1, 1, 40}, 20);
    const IntervalHistogram empty(20);

    CHECK(merge(a, empty) == a);
    CHECK(merge(a, b) == merge(b, a));
    CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));

    const IntervalHistogram other(21);
    CHECK_THROWS_AS(merge(a, other), std::invalid_argument);
}

TEST_CASE("merging two halves of a stream with the seam equals the whole") {
    SimConfig c;
    c.params = DetectorParams::from_reduced(0.05, 1e-4, 0.05, 0.4);
    c.stop = StopCondition::detections(20000);
    c.seed = 77;
    const EventStream s = simulate_stream(c);
    const auto gaps = extract_intervals(s);
    const IntervalHistogram whole = build_histogram(gaps, 500);

    const std::size_t cut = s.gates.size() / 2;
    std::vector<std::uint64_t> first(s.gates.begin(), s.gates.begin() + cut);
    // the bridging detection goes to the later chunk
    std::vector<std::uint64_t> second(s.gates.begin() + cut - 1, s.gates.end());
    const IntervalHistogram h1 = build_histogram(extract_intervals(first), 500);
    const IntervalHistogram h2 = build_histogram(extract_intervals(second), 500);
    CHECK(merge(h1, h2) == whole);
}

TEST_CASE("sliding window keeps histogram and ring consistent") {
    SlidingWindow w(2, 10);
    w.push(1);
    w.push(1);
    w.push(3);
    CHECK(w.size() == 2);
    CHECK(w.histogram().count(1) == 1);
    CHECK(w.histogram().count(3) == 1);
    CHECK(w.histogram().total() == 2);
    CHECK(w.contents() == std::deque<std::uint64_t>{1, 3});

    CHECK_THROWS_AS(SlidingWindow(0, 10), std::invalid_argument);
}

TEST_CASE("window matches from-scratch recomputation and a reference queue") {
    std::mt19937_64 rng(31);
    SlidingWindow w(5000, 200);
    std::deque<std::uint64_t> reference;
    for (int i = 0; i < 100000; ++i) {
        const std::uint64_t gap = 1 + rng() % 300;
        w.push(gap);
        reference.push_back(gap);
        if (reference.size() > 5000) {
            reference.pop_front();
        }
        if (i % 1000 == 999) {
            std::vector<std::uint64_t> v(reference.begin(), reference.end());
            CHECK(w.histogram() == build_histogram(v, 200));
            CHECK(w.contents() == reference);
        }
    }
    CHECK(w.size() == 5000);
}

TEST_CASE("empirical tail slope estimates log10 q") {
    DetectorParams p = DetectorParams::from_reduced(0.012, 2e-4, 0.0185, 0.25);
    SimConfig c;
    c.params = p;
    c.stop = StopCondition::detections(200001);
    c.seed = 86;
    const auto gaps = extract_intervals(simulate_stream(c));
    const IntervalHistogram hist = build_histogram(gaps, 10000);

    // weighted regression of log10 pmf on m over bins with >= 100 counts,
    // past the afterpulse knee
    const IntervalModel im = IntervalModel::from_params(p);
    std::uint64_t knee = 1;
    while (im.afterpulse_prob(knee) > (1.0 - im.q) * 1e-3) {
        ++knee;
    }
    double sw = 0.0, sx = 0.0, sy = 0.0;
    std::vector<std::uint64_t> ms;
    for (std::uint64_t m = knee; m <= hist.m_max(); ++m) {
        if (hist.count(m) < 100) {
            continue;
        }
        ms.push_back(m);
        const double wgt = static_cast<double>(hist.count(m));
        sw += wgt;
        sx += wgt * static_cast<double>(m);
        sy += wgt * std::log10(hist.empirical_pmf(m));
    }
    REQUIRE(ms.size() > 50);
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0, ss = 0.0;
    for (std::uint64_t m : ms) {
        const double wgt = static_cast<double>(hist.count(m));
        const double y = std::log10(hist.empirical_pmf(m));
        sxx += wgt * (static_cast<double>(m) - mx) * (static_cast<double>(m) - mx);
        sxy += wgt * (static_cast<double>(m) - mx) * y;
    }
    const double slope = sxy / sxx;
    for (std::uint64_t m : ms) {
        const double wgt = static_cast<double>(hist.count(m));
        const double r = std::log10(hist.empirical_pmf(m)) - (my + slope * (static_cast<double>(m) - mx));
        ss += wgt * r * r;
    }
    const double sigma2 = ss / (static_cast<double>(ms.size()) - 2.0);
    const double se = std::sqrt(sigma2 / sxx);
    CHECK(std::abs(slope - std::log10(im.q)) < 3.0 * se);
}
