#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <stdexcept>

#include "malgrid/tensor.hpp"

using namespace malgrid;

TEST_CASE("construction validates shape against data length") {
    CHECK_NOTHROW(tensor_from({2, 3}, {1, 2, 3, 4, 5, 6}));
    CHECK_THROWS_AS(tensor_from({2, 3}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(tensor_from({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(tensor_from({0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(tensor_from({-2, 3}, {1, 2, 3, 4, 5, 6}), std::invalid_argument);
}

TEST_CASE("zeros fills every element") {
    const Tensor t = Tensor::zeros({3, 4, 2});
    CHECK(t.size() == 24);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0f);
}

TEST_CASE("indexing is row-major") {
    Tensor t = tensor_from({2, 3}, {0, 1, 2, 10, 11, 12});
    CHECK(t.at(0, 0) == 0.0f);
    CHECK(t.at(0, 2) == 2.0f);
    CHECK(t.at(1, 0) == 10.0f);
    CHECK(t.at(1, 2) == 12.0f);
    t.at(1, 1) = 99.0f;
    CHECK(t[4] == 99.0f);
}

TEST_CASE("reshape keeps contents and rejects bad sizes") {
    const Tensor t = tensor_from({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor r = reshape(t, {3, 2});
    CHECK(r.shape() == std::vector<int>{3, 2});
    for (std::size_t i = 0; i < 6; ++i) CHECK(r[i] == t[i]);
    CHECK_THROWS_AS(reshape(t, {4, 2}), std::invalid_argument);
}

TEST_CASE("matmul matches a worked example") {
    const Tensor a = tensor_from({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor b = tensor_from({3, 2}, {7, 8, 9, 10, 11, 12});
    const Tensor c = matmul(a, b);
    CHECK(c.shape() == std::vector<int>{2, 2});
    CHECK(c.at(0, 0) == doctest::Approx(58));
    CHECK(c.at(0, 1) == doctest::Approx(64));
    CHECK(c.at(1, 0) == doctest::Approx(139));
    CHECK(c.at(1, 1) == doctest::Approx(154));
    CHECK_THROWS_AS(matmul(a, a), std::invalid_argument);
}

TEST_CASE("argmax_last_axis breaks ties toward the lower index") {
    const Tensor t = tensor_from({2, 3}, {1, 3, 3, 5, 5, 5});
    const std::vector<int> idx = argmax_last_axis(t);
    CHECK(idx == std::vector<int>{1, 0});
    CHECK_THROWS_AS(argmax_last_axis(tensor_from({3}, {1, 2, 3})), std::invalid_argument);
}

TEST_CASE("shape_string formats like a shape") {
    CHECK(Tensor::shape_string({3, 4, 5}) == "[3,4,5]");
}

TEST_CASE("non-finite values are rejected at construction") {
    CHECK_THROWS_AS(tensor_from({2}, {1.0f, std::numeric_limits<float>::infinity()}),
                    std::invalid_argument);
    CHECK_THROWS_AS(tensor_from({1}, {std::numeric_limits<float>::quiet_NaN()}),
                    std::invalid_argument);
}
