#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "malgrid/kernels.hpp"
#include "malgrid/rng.hpp"

using namespace malgrid;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, std::uint64_t seed, double lo = -1.0,
                          double hi = 1.0) {
    Rng rng(seed);
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng.next_double(lo, hi));
    return v;
}

// Central finite difference of a scalar functional with respect to one
// entry of `param`.
template <typename F>
double fd_grad(std::vector<double>& param, std::size_t k, F&& loss, double h = 1e-6) {
    const double keep = param[k];
    param[k] = keep + h;
    const double up = loss();
    param[k] = keep - h;
    const double down = loss();
    param[k] = keep;
    return (up - down) / (2.0 * h);
}

}  // namespace

TEST_CASE("conv forward matches a hand-computed window") {
    // 3x3 single-channel input, one all-ones kernel: output = window sum + bias.
    const std::vector<float> in = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<float> kern(9, 1.0f);
    const std::vector<float> bias = {0.5f};
    std::vector<float> out(1);
    kernels::serial::conv2d_forward(in.data(), 3, 3, 1, kern.data(), 1, bias.data(),
                                    out.data());
    CHECK(out[0] == doctest::Approx(45.5f));
}

TEST_CASE("conv forward is cross-correlation, not flipped convolution") {
    // A kernel that picks out the top-left corner of each window.
    std::vector<float> in(5 * 5, 0.0f);
    for (int i = 0; i < 25; ++i) in[static_cast<std::size_t>(i)] = static_cast<float>(i);
    std::vector<float> kern(9, 0.0f);
    kern[0] = 1.0f;  // dy=0, dx=0
    const std::vector<float> bias = {0.0f};
    std::vector<float> out(9);
    kernels::serial::conv2d_forward(in.data(), 5, 5, 1, kern.data(), 1, bias.data(),
                                    out.data());
    // out(y, x) must equal in(y, x), the unshifted corner.
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            CHECK(out[static_cast<std::size_t>(y * 3 + x)] ==
                  in[static_cast<std::size_t>(y * 5 + x)]);
}

TEST_CASE("conv forward agrees with a naive reference on random data") {
    const int h = 7, w = 6, cin = 3, cout = 4;
    const auto in = random_vec<float>(static_cast<std::size_t>(h) * w * cin, 1);
    const auto kern = random_vec<float>(static_cast<std::size_t>(9) * cin * cout, 2);
    const auto bias = random_vec<float>(static_cast<std::size_t>(cout), 3);
    const int oh = h - 2, ow = w - 2;
    std::vector<float> out(static_cast<std::size_t>(oh) * ow * cout);
    kernels::serial::conv2d_forward(in.data(), h, w, cin, kern.data(), cout, bias.data(),
                                    out.data());
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int f = 0; f < cout; ++f) {
                double acc = bias[static_cast<std::size_t>(f)];
                for (int dy = 0; dy < 3; ++dy)
                    for (int dx = 0; dx < 3; ++dx)
                        for (int c = 0; c < cin; ++c)
                            acc += static_cast<double>(
                                       in[(static_cast<std::size_t>(y + dy) * w + (x + dx)) * cin + c]) *
                                   kern[(static_cast<std::size_t>(dy * 3 + dx) * cin + c) * cout + f];
                CHECK(out[(static_cast<std::size_t>(y) * ow + x) * cout + f] ==
                      doctest::Approx(acc).epsilon(1e-4));
            }
}

TEST_CASE("conv backward matches finite differences in double") {
    const int h = 5, w = 4, cin = 2, cout = 3;
    const int oh = h - 2, ow = w - 2;
    auto in = random_vec<double>(static_cast<std::size_t>(h) * w * cin, 4);
    auto kern = random_vec<double>(static_cast<std::size_t>(9) * cin * cout, 5);
    const auto bias = random_vec<double>(static_cast<std::size_t>(cout), 6);
    const auto g = random_vec<double>(static_cast<std::size_t>(oh) * ow * cout, 7);

    // Scalar functional: L = sum(out .* g).
    auto loss = [&] {
        std::vector<double> out(static_cast<std::size_t>(oh) * ow * cout);
        kernels::serial::conv2d_forward(in.data(), h, w, cin, kern.data(), cout,
                                        bias.data(), out.data());
        double l = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) l += out[i] * g[i];
        return l;
    };

    std::vector<double> din(in.size());
    kernels::serial::conv2d_backward_input(kern.data(), cin, cout, g.data(), oh, ow,
                                           din.data(), h, w);
    for (std::size_t k = 0; k < in.size(); ++k)
        CHECK(din[k] == doctest::Approx(fd_grad(in, k, loss)).epsilon(1e-6));

    std::vector<double> dk(kern.size()), dbias(static_cast<std::size_t>(cout));
    kernels::serial::conv2d_backward_params(in.data(), h, w, cin, g.data(), cout,
                                            dk.data(), dbias.data());
    for (std::size_t k = 0; k < kern.size(); ++k)
        CHECK(dk[k] == doctest::Approx(fd_grad(kern, k, loss)).epsilon(1e-6));
    // dL/dbias_f = sum of g over the f-th feature map.
    for (int f = 0; f < cout; ++f) {
        double expect = 0.0;
        for (int i = 0; i < oh * ow; ++i)
            expect += g[static_cast<std::size_t>(i) * cout + f];
        CHECK(dbias[static_cast<std::size_t>(f)] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("conv is linear in its input") {
    const int h = 6, w = 6, cin = 2, cout = 2;
    const auto a = random_vec<double>(static_cast<std::size_t>(h) * w * cin, 8);
    const auto b = random_vec<double>(static_cast<std::size_t>(h) * w * cin, 9);
    const auto kern = random_vec<double>(static_cast<std::size_t>(9) * cin * cout, 10);
    const std::vector<double> zero_bias(static_cast<std::size_t>(cout), 0.0);
    std::vector<double> sum_in(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sum_in[i] = a[i] + b[i];

    const int oh = h - 2, ow = w - 2;
    const std::size_t outn = static_cast<std::size_t>(oh) * ow * cout;
    std::vector<double> out_a(outn), out_b(outn), out_sum(outn);
    kernels::serial::conv2d_forward(a.data(), h, w, cin, kern.data(), cout,
                                    zero_bias.data(), out_a.data());
    kernels::serial::conv2d_forward(b.data(), h, w, cin, kern.data(), cout,
                                    zero_bias.data(), out_b.data());
    kernels::serial::conv2d_forward(sum_in.data(), h, w, cin, kern.data(), cout,
                                    zero_bias.data(), out_sum.data());
    for (std::size_t i = 0; i < outn; ++i)
        CHECK(out_sum[i] == doctest::Approx(out_a[i] + out_b[i]).epsilon(1e-12));
}

TEST_CASE("maxpool picks the max and ties go to the first element") {
    // 4x4, one channel; second window is all equal.
    const std::vector<float> in = {1, 9, 5, 5,  //
                                   3, 2, 5, 5,  //
                                   0, 0, 7, 1,  //
                                   0, 4, 2, 8};
    std::vector<float> out(4);
    std::vector<std::int32_t> arg(4);
    kernels::serial::maxpool2_forward(in.data(), 4, 4, 1, out.data(), arg.data());
    CHECK(out == std::vector<float>{9, 5, 4, 8});
    CHECK(arg[0] == 1);   // the 9
    CHECK(arg[1] == 2);   // first of the tied 5s, row-major
    CHECK(arg[2] == 13);  // the 4
    CHECK(arg[3] == 15);  // the 8
}

TEST_CASE("odd trailing rows and columns are dropped by pooling") {
    const std::vector<float> in = {1, 2, 3,  //
                                   4, 5, 6,  //
                                   7, 8, 9};
    std::vector<float> out(1);
    std::vector<std::int32_t> arg(1);
    kernels::serial::maxpool2_forward(in.data(), 3, 3, 1, out.data(), arg.data());
    CHECK(out[0] == 5.0f);
    CHECK(arg[0] == 4);
}

TEST_CASE("maxpool backward routes gradient to the recorded winners") {
    const std::vector<float> in = {1, 9, 5, 5,  //
                                   3, 2, 5, 5,  //
                                   0, 0, 7, 1,  //
                                   0, 4, 2, 8};
    std::vector<float> out(4);
    std::vector<std::int32_t> arg(4);
    kernels::serial::maxpool2_forward(in.data(), 4, 4, 1, out.data(), arg.data());
    const std::vector<float> dout = {10, 20, 30, 40};
    std::vector<float> din(16, -1.0f);
    kernels::serial::maxpool2_backward(arg.data(), 4, dout.data(), din.data(), 16);
    std::vector<float> expect(16, 0.0f);
    expect[1] = 10;
    expect[2] = 20;
    expect[13] = 30;
    expect[15] = 40;
    CHECK(din == expect);
}

TEST_CASE("dense forward is an affine map") {
    // 2 inputs, 3 outputs, hand-checked.
    const std::vector<float> in = {2, -1};
    const std::vector<float> w = {1, 2, 3,  //
                                  4, 5, 6};
    const std::vector<float> bias = {0.5f, -0.5f, 0.0f};
    std::vector<float> out(3);
    kernels::serial::dense_forward(in.data(), 2, w.data(), 3, bias.data(), out.data());
    CHECK(out[0] == doctest::Approx(2 * 1 - 1 * 4 + 0.5));
    CHECK(out[1] == doctest::Approx(2 * 2 - 1 * 5 - 0.5));
    CHECK(out[2] == doctest::Approx(2 * 3 - 1 * 6));
}

TEST_CASE("dense backward matches finite differences in double") {
    const int nin = 9, nout = 5;
    auto in = random_vec<double>(static_cast<std::size_t>(nin), 11);
    auto w = random_vec<double>(static_cast<std::size_t>(nin) * nout, 12);
    const auto bias = random_vec<double>(static_cast<std::size_t>(nout), 13);
    const auto g = random_vec<double>(static_cast<std::size_t>(nout), 14);

    auto loss = [&] {
        std::vector<double> out(static_cast<std::size_t>(nout));
        kernels::serial::dense_forward(in.data(), nin, w.data(), nout, bias.data(),
                                       out.data());
        double l = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) l += out[i] * g[i];
        return l;
    };

    std::vector<double> din(in.size()), dw(w.size()), dbias(static_cast<std::size_t>(nout));
    kernels::serial::dense_backward(in.data(), nin, w.data(), nout, g.data(), din.data(),
                                    dw.data(), dbias.data());
    for (std::size_t k = 0; k < in.size(); ++k)
        CHECK(din[k] == doctest::Approx(fd_grad(in, k, loss)).epsilon(1e-6));
    for (std::size_t k = 0; k < w.size(); ++k)
        CHECK(dw[k] == doctest::Approx(fd_grad(w, k, loss)).epsilon(1e-6));
    for (std::size_t k = 0; k < dbias.size(); ++k)
        CHECK(dbias[k] == doctest::Approx(g[k]).epsilon(1e-12));
}

TEST_CASE("relu clamps forward and gates backward") {
    const std::vector<float> in = {-2, -0.5f, 0, 0.5f, 2};
    std::vector<float> out(5);
    kernels::serial::relu_forward(in.data(), 5, out.data());
    CHECK(out == std::vector<float>{0, 0, 0, 0.5f, 2});

    const std::vector<float> dout = {1, 2, 3, 4, 5};
    std::vector<float> din(5);
    kernels::serial::relu_backward(in.data(), dout.data(), 5, din.data());
    CHECK(din == std::vector<float>{0, 0, 0, 4, 5});
}

TEST_CASE("softmax normalizes and survives large logits") {
    const std::vector<float> logits = {1000.0f, 1001.0f, 1002.0f};
    std::vector<float> probs(3);
    kernels::softmax(logits.data(), 3, probs.data());
    double sum = 0.0;
    for (float p : probs) {
        CHECK(p > 0.0f);
        CHECK(p <= 1.0f);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    // Shift invariance: same as softmax of {0, 1, 2}.
    const std::vector<float> small = {0.0f, 1.0f, 2.0f};
    std::vector<float> probs2(3);
    kernels::softmax(small.data(), 3, probs2.data());
    for (int i = 0; i < 3; ++i)
        CHECK(probs[static_cast<std::size_t>(i)] ==
              doctest::Approx(probs2[static_cast<std::size_t>(i)]).epsilon(1e-6));
}

TEST_CASE("uniform logits give uniform probabilities") {
    const std::vector<float> logits(25, 3.25f);
    std::vector<float> probs(25);
    kernels::softmax(logits.data(), 25, probs.data());
    for (float p : probs) CHECK(p == doctest::Approx(0.04).epsilon(1e-6));
}

TEST_CASE("serial and parallel kernels agree bitwise") {
    const int h = 13, w = 11, cin = 5, cout = 7;
    const int oh = h - 2, ow = w - 2;
    const auto in = random_vec<float>(static_cast<std::size_t>(h) * w * cin, 20);
    const auto kern = random_vec<float>(static_cast<std::size_t>(9) * cin * cout, 21);
    const auto bias = random_vec<float>(static_cast<std::size_t>(cout), 22);
    const auto g = random_vec<float>(static_cast<std::size_t>(oh) * ow * cout, 23);

    std::vector<float> a(static_cast<std::size_t>(oh) * ow * cout), b(a.size());
    kernels::serial::conv2d_forward(in.data(), h, w, cin, kern.data(), cout, bias.data(),
                                    a.data());
    kernels::parallel::conv2d_forward(in.data(), h, w, cin, kern.data(), cout, bias.data(),
                                      b.data());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);

    std::vector<float> din_a(in.size()), din_b(in.size());
    kernels::serial::conv2d_backward_input(kern.data(), cin, cout, g.data(), oh, ow,
                                           din_a.data(), h, w);
    kernels::parallel::conv2d_backward_input(kern.data(), cin, cout, g.data(), oh, ow,
                                             din_b.data(), h, w);
    CHECK(std::memcmp(din_a.data(), din_b.data(), din_a.size() * sizeof(float)) == 0);

    std::vector<float> dk_a(kern.size()), dk_b(kern.size());
    std::vector<float> db_a(static_cast<std::size_t>(cout)), db_b(db_a.size());
    kernels::serial::conv2d_backward_params(in.data(), h, w, cin, g.data(), cout,
                                            dk_a.data(), db_a.data());
    kernels::parallel::conv2d_backward_params(in.data(), h, w, cin, g.data(), cout,
                                              dk_b.data(), db_b.data());
    CHECK(std::memcmp(dk_a.data(), dk_b.data(), dk_a.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(db_a.data(), db_b.data(), db_a.size() * sizeof(float)) == 0);

    std::vector<float> pool_a(static_cast<std::size_t>(h / 2) * (w / 2) * cin);
    std::vector<float> pool_b(pool_a.size());
    std::vector<std::int32_t> arg_a(pool_a.size()), arg_b(pool_a.size());
    kernels::serial::maxpool2_forward(in.data(), h, w, cin, pool_a.data(), arg_a.data());
    kernels::parallel::maxpool2_forward(in.data(), h, w, cin, pool_b.data(), arg_b.data());
    CHECK(std::memcmp(pool_a.data(), pool_b.data(), pool_a.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(arg_a.data(), arg_b.data(), arg_a.size() * sizeof(std::int32_t)) == 0);

    const auto pd = random_vec<float>(pool_a.size(), 24);
    std::vector<float> pdin_a(in.size()), pdin_b(in.size());
    kernels::serial::maxpool2_backward(arg_a.data(), pd.size(), pd.data(), pdin_a.data(),
                                       pdin_a.size());
    kernels::parallel::maxpool2_backward(arg_a.data(), pd.size(), pd.data(), pdin_b.data(),
                                         pdin_b.size());
    CHECK(std::memcmp(pdin_a.data(), pdin_b.data(), pdin_a.size() * sizeof(float)) == 0);

    const int nin = 257, nout = 101;  // awkward sizes to stress block splits
    const auto din_v = random_vec<float>(static_cast<std::size_t>(nin), 25);
    const auto wmat = random_vec<float>(static_cast<std::size_t>(nin) * nout, 26);
    const auto bias2 = random_vec<float>(static_cast<std::size_t>(nout), 27);
    const auto g2 = random_vec<float>(static_cast<std::size_t>(nout), 28);
    std::vector<float> dout_a(static_cast<std::size_t>(nout)), dout_b(dout_a.size());
    kernels::serial::dense_forward(din_v.data(), nin, wmat.data(), nout, bias2.data(),
                                   dout_a.data());
    kernels::parallel::dense_forward(din_v.data(), nin, wmat.data(), nout, bias2.data(),
                                     dout_b.data());
    CHECK(std::memcmp(dout_a.data(), dout_b.data(), dout_a.size() * sizeof(float)) == 0);

    std::vector<float> ddin_a(static_cast<std::size_t>(nin)), ddin_b(ddin_a.size());
    std::vector<float> dw_a(wmat.size()), dw_b(wmat.size());
    std::vector<float> db2_a(static_cast<std::size_t>(nout)), db2_b(db2_a.size());
    kernels::serial::dense_backward(din_v.data(), nin, wmat.data(), nout, g2.data(),
                                    ddin_a.data(), dw_a.data(), db2_a.data());
    kernels::parallel::dense_backward(din_v.data(), nin, wmat.data(), nout, g2.data(),
                                      ddin_b.data(), dw_b.data(), db2_b.data());
    CHECK(std::memcmp(ddin_a.data(), ddin_b.data(), ddin_a.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(dw_a.data(), dw_b.data(), dw_a.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(db2_a.data(), db2_b.data(), db2_a.size() * sizeof(float)) == 0);
}
