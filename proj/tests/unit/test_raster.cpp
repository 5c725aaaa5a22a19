#include <doctest.h>

#include <random>

#include "mothscan/raster.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace mothscan;

TEST_CASE("to_grayscale uses luma weights") {
    ColorImage img(3, 1);
    img.at(0, 0) = {255, 255, 255};
    img.at(1, 0) = {0, 0, 0};
    img.at(2, 0) = {100, 200, 50};
    const GrayImage g = to_grayscale(img);
    CHECK(g.at(0, 0) == 255.0);
    CHECK(g.at(1, 0) == 0.0);
    CHECK(g.at(2, 0) == doctest::Approx(153.0).epsilon(1e-12));
}

TEST_CASE("to_grayscale stays within the channel range") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(0, 255);
    ColorImage img(17, 9);
    for (auto& p : img.pixels()) p = {d(rng), d(rng), d(rng)};
    img.at(0, 0) = {77, 77, 77};
    const GrayImage g = to_grayscale(img);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Rgb& p = img.at(x, y);
            CHECK(g.at(x, y) >= std::min({p.r, p.g, p.b}));
            CHECK(g.at(x, y) <= std::max({p.r, p.g, p.b}));
        }
    }
    CHECK(g.at(0, 0) == 77.0);
}

TEST_CASE("crop") {
    std::vector<double> v(16);
    for (int i = 0; i < 16; ++i) v[i] = i;
    const GrayImage grid(4, 4, v);

    SUBCASE("full image is identity") { CHECK(crop(grid, Box{0, 0, 4, 4}) == grid); }
    SUBCASE("single top-left pixel") {
        const auto c = crop(grid, Box{0, 0, 1, 1});
        CHECK(c.width() == 1);
        CHECK(c.at(0, 0) == 0.0);
    }
    SUBCASE("interior 2x2") {
        const auto c = crop(grid, Box{1, 1, 2, 2});
        // value at (x, y) is 4y + x
        CHECK(c.at(0, 0) == 5.0);
        CHECK(c.at(1, 0) == 6.0);
        CHECK(c.at(0, 1) == 9.0);
        CHECK(c.at(1, 1) == 10.0);
    }
    SUBCASE("out of bounds throws") {
        CHECK_THROWS_AS(crop(grid, Box{3, 3, 2, 1}), BoundsError);
        CHECK_THROWS_AS(crop(grid, Box{-1, 0, 1, 1}), BoundsError);
        CHECK_THROWS_AS(crop(grid, Box{0, 0, 0, 1}), BoundsError);
    }
}

TEST_CASE("crop composes with offset boxes") {
    std::mt19937_64 rng(11);
    const GrayImage img = testing::random_gray(40, 30, rng);
    std::uniform_int_distribution<int> u(0, 1000);
    for (int trial = 0; trial < 200; ++trial) {
        const Box outer{u(rng) % 20, u(rng) % 15, 1 + u(rng) % 20, 1 + u(rng) % 15};
        const Box inner{u(rng) % outer.w, u(rng) % outer.h, 1, 1};
        const Box inner_fit{inner.x, inner.y, 1 + u(rng) % (outer.w - inner.x), 1 + u(rng) % (outer.h - inner.y)};
        const Box composed{outer.x + inner_fit.x, outer.y + inner_fit.y, inner_fit.w, inner_fit.h};
        CHECK(crop(crop(img, outer), inner_fit) == crop(img, composed));
    }
}

TEST_CASE("iou") {
    CHECK(iou(Box{3, 4, 5, 6}, Box{3, 4, 5, 6}) == 1.0);
    CHECK(iou(Box{0, 0, 10, 10}, Box{20, 20, 3, 3}) == 0.0);
    CHECK(iou(Box{0, 0, 10, 10}, Box{10, 0, 10, 10}) == 0.0);
    CHECK(iou(Box{0, 0, 10, 10}, Box{5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("iou properties on random boxes") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 2000; ++i) {
        const Box a = testing::random_box(rng), b = testing::random_box(rng);
        const double v = iou(a, b);
        CHECK(v == iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(iou(a, a) == 1.0);
        const auto [n, d] = oracle::iou_fraction(a, b);
        CHECK(v == double(n) / double(d));
    }
}

TEST_CASE("raster rejects inconsistent shapes") {
    CHECK_THROWS_AS(GrayImage(0, 3), ShapeError);
    CHECK_THROWS_AS(GrayImage(2, 2, std::vector<double>(3)), ShapeError);
    GrayImage g(2, 1);
    g.at(1, 0) = std::nan("");
    CHECK_THROWS_AS(check_finite(g), ValidationError);
}

TEST_CASE("expand_clamped") {
    CHECK(expand_clamped(Box{5, 5, 2, 2}, 10, 12, 9) == Box{0, 0, 12, 9});
    CHECK(expand_clamped(Box{5, 5, 2, 2}, 1, 100, 100) == Box{4, 4, 4, 4});
}
