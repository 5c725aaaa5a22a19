#include <doctest.h>

#include <random>

#include "mothscan/detector.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace mothscan;

namespace {

std::vector<Component> sorted(std::vector<Component> v) {
    std::sort(v.begin(), v.end(), [](const Component& a, const Component& b) {
        return std::tie(a.box.y, a.box.x, a.box.w, a.box.h, a.area) < std::tie(b.box.y, b.box.x, b.box.w, b.box.h, b.area);
    });
    return v;
}

}  // namespace

TEST_CASE("empty mask has no components") { CHECK(connected_components(BinaryImage(6, 6)).empty()); }

TEST_CASE("two disjoint blocks") {
    BinaryImage b(10, 10);
    for (int y = 1; y < 3; ++y)
        for (int x = 1; x < 3; ++x) b.at(x, y) = 1;
    for (int y = 6; y < 8; ++y)
        for (int x = 5; x < 7; ++x) b.at(x, y) = 1;
    const auto comps = connected_components(b);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0] == Component{Box{1, 1, 2, 2}, 4});
    CHECK(comps[1] == Component{Box{5, 6, 2, 2}, 4});
}

TEST_CASE("diagonal neighbours join under 8-connectivity") {
    BinaryImage b(4, 4);
    b.at(0, 0) = 1;
    b.at(1, 1) = 1;
    b.at(2, 2) = 1;
    const auto comps = connected_components(b);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0] == Component{Box{0, 0, 3, 3}, 3});
}

TEST_CASE("output order is by box origin") {
    BinaryImage b(10, 10);
    b.at(8, 1) = 1;
    b.at(2, 1) = 1;
    b.at(5, 0) = 1;
    const auto comps = connected_components(b);
    REQUIRE(comps.size() == 3);
    CHECK(comps[0].box == Box{5, 0, 1, 1});
    CHECK(comps[1].box == Box{2, 1, 1, 1});
    CHECK(comps[2].box == Box{8, 1, 1, 1});
}

TEST_CASE("random masks match recursive flood fill") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const BinaryImage m = testing::random_mask(16, 16, rng, 0.2 + 0.005 * trial);
        CHECK(connected_components(m) == sorted(oracle::flood_fill_components(m)));
    }
}
