#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "malgrid/kernels.hpp"
#include "malgrid/rng.hpp"

// Times the serial reference kernels against the OpenMP ones on the
// layer shapes the stock networks actually run, and verifies on the way
// that both flavors produce bitwise-identical output.

using namespace malgrid;

namespace {

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.next_double(-1.0, 1.0));
    return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Repeats fn until ~0.3 s elapsed, returns seconds per call.
template <typename F>
double time_call(F&& fn) {
    fn();  // warm up
    int reps = 1;
    for (;;) {
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < reps; ++r) fn();
        const double dt = seconds_since(t0);
        if (dt > 0.3) return dt / reps;
        reps = dt <= 0.0 ? reps * 8 : static_cast<int>(reps * (0.4 / dt)) + 1;
    }
}

struct Row {
    std::string name;
    double flop;
    double serial_s;
    double parallel_s;
    bool bitwise_equal;
};

void print_rows(const std::vector<Row>& rows) {
    std::printf("%-28s %10s %10s %10s %9s %8s\n", "kernel", "GFLOP", "serial",
                "parallel", "speedup", "bitwise");
    for (const Row& r : rows) {
        std::printf("%-28s %10.4f %8.2fms %8.2fms %8.2fx %8s\n", r.name.c_str(),
                    r.flop / 1e9, r.serial_s * 1e3, r.parallel_s * 1e3,
                    r.serial_s / r.parallel_s, r.bitwise_equal ? "yes" : "DIFF");
    }
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP\n\n");
#endif

    std::vector<Row> rows;

    struct ConvCase {
        const char* name;
        int h, w, cin, cout;
    };
    // The convolution stages of the two stock models at input side 32.
    const ConvCase conv_cases[] = {
        {"conv 32x32x1 -> 32", 32, 32, 1, 32},
        {"conv 15x15x32 -> 64", 15, 15, 32, 64},
        {"conv 13x13x64 -> 64", 13, 13, 64, 64},
    };
    for (const ConvCase& c : conv_cases) {
        const int oh = c.h - 2, ow = c.w - 2;
        const auto in = random_floats(static_cast<std::size_t>(c.h) * c.w * c.cin, 1);
        const auto kern = random_floats(static_cast<std::size_t>(9) * c.cin * c.cout, 2);
        const auto bias = random_floats(static_cast<std::size_t>(c.cout), 3);
        std::vector<float> out_s(static_cast<std::size_t>(oh) * ow * c.cout);
        std::vector<float> out_p(out_s.size());

        const double flop = 2.0 * oh * ow * c.cout * 9.0 * c.cin;
        const double ts = time_call([&] {
            kernels::serial::conv2d_forward(in.data(), c.h, c.w, c.cin, kern.data(),
                                            c.cout, bias.data(), out_s.data());
        });
        const double tp = time_call([&] {
            kernels::parallel::conv2d_forward(in.data(), c.h, c.w, c.cin, kern.data(),
                                              c.cout, bias.data(), out_p.data());
        });
        const bool eq =
            std::memcmp(out_s.data(), out_p.data(), out_s.size() * sizeof(float)) == 0;
        rows.push_back({std::string("fwd ") + c.name, flop, ts, tp, eq});

        std::vector<float> din_s(in.size()), din_p(in.size());
        const double bflop = 2.0 * oh * ow * c.cout * 9.0 * c.cin;
        const double bs = time_call([&] {
            kernels::serial::conv2d_backward_input(kern.data(), c.cin, c.cout,
                                                   out_s.data(), oh, ow, din_s.data(),
                                                   c.h, c.w);
        });
        const double bp = time_call([&] {
            kernels::parallel::conv2d_backward_input(kern.data(), c.cin, c.cout,
                                                     out_s.data(), oh, ow, din_p.data(),
                                                     c.h, c.w);
        });
        const bool beq =
            std::memcmp(din_s.data(), din_p.data(), din_s.size() * sizeof(float)) == 0;
        rows.push_back({std::string("bwd-in ") + c.name, bflop, bs, bp, beq});

        std::vector<float> dk_s(kern.size()), dk_p(kern.size());
        std::vector<float> db_s(bias.size()), db_p(bias.size());
        const double ks = time_call([&] {
            kernels::serial::conv2d_backward_params(in.data(), c.h, c.w, c.cin,
                                                    out_s.data(), c.cout, dk_s.data(),
                                                    db_s.data());
        });
        const double kp = time_call([&] {
            kernels::parallel::conv2d_backward_params(in.data(), c.h, c.w, c.cin,
                                                      out_s.data(), c.cout, dk_p.data(),
                                                      db_p.data());
        });
        const bool keq =
            std::memcmp(dk_s.data(), dk_p.data(), dk_s.size() * sizeof(float)) == 0 &&
            std::memcmp(db_s.data(), db_p.data(), db_s.size() * sizeof(float)) == 0;
        rows.push_back({std::string("bwd-par ") + c.name, bflop, ks, kp, keq});
    }

    // The big dense layer of the baseline model.
    {
        const int nin = 7200, nout = 100;
        const auto in = random_floats(static_cast<std::size_t>(nin), 4);
        const auto w = random_floats(static_cast<std::size_t>(nin) * nout, 5);
        const auto bias = random_floats(static_cast<std::size_t>(nout), 6);
        std::vector<float> out_s(static_cast<std::size_t>(nout)), out_p(out_s.size());
        const double flop = 2.0 * nin * nout;
        const double ts = time_call([&] {
            kernels::serial::dense_forward(in.data(), nin, w.data(), nout, bias.data(),
                                           out_s.data());
        });
        const double tp = time_call([&] {
            kernels::parallel::dense_forward(in.data(), nin, w.data(), nout, bias.data(),
                                             out_p.data());
        });
        const bool eq =
            std::memcmp(out_s.data(), out_p.data(), out_s.size() * sizeof(float)) == 0;
        rows.push_back({"fwd dense 7200 -> 100", flop, ts, tp, eq});

        std::vector<float> din_s(static_cast<std::size_t>(nin)), din_p(din_s.size());
        std::vector<float> dw_s(w.size()), dw_p(w.size());
        std::vector<float> db_s(static_cast<std::size_t>(nout)), db_p(db_s.size());
        const double bs = time_call([&] {
            kernels::serial::dense_backward(in.data(), nin, w.data(), nout, out_s.data(),
                                            din_s.data(), dw_s.data(), db_s.data());
        });
        const double bp = time_call([&] {
            kernels::parallel::dense_backward(in.data(), nin, w.data(), nout, out_s.data(),
                                              din_p.data(), dw_p.data(), db_p.data());
        });
        const bool eqb =
            std::memcmp(din_s.data(), din_p.data(), din_s.size() * sizeof(float)) == 0 &&
            std::memcmp(dw_s.data(), dw_p.data(), dw_s.size() * sizeof(float)) == 0;
        rows.push_back({"bwd dense 7200 -> 100", 2.0 * flop, bs, bp, eqb});
    }

    // Pooling over the first conv stage's output.
    {
        const int h = 30, w = 30, c = 32;
        const auto in = random_floats(static_cast<std::size_t>(h) * w * c, 7);
        std::vector<float> out_s(static_cast<std::size_t>(h / 2) * (w / 2) * c);
        std::vector<float> out_p(out_s.size());
        std::vector<std::int32_t> arg_s(out_s.size()), arg_p(out_s.size());
        const double flop = 3.0 * out_s.size();  // comparisons, not FLOPs proper
        const double ts = time_call([&] {
            kernels::serial::maxpool2_forward(in.data(), h, w, c, out_s.data(),
                                              arg_s.data());
        });
        const double tp = time_call([&] {
            kernels::parallel::maxpool2_forward(in.data(), h, w, c, out_p.data(),
                                                arg_p.data());
        });
        const bool eq =
            std::memcmp(out_s.data(), out_p.data(), out_s.size() * sizeof(float)) == 0 &&
            std::memcmp(arg_s.data(), arg_p.data(), arg_s.size() * sizeof(std::int32_t)) == 0;
        rows.push_back({"fwd maxpool 30x30x32", flop, ts, tp, eq});
    }

    print_rows(rows);

    bool all_equal = true;
    for (const Row& r : rows) all_equal = all_equal && r.bitwise_equal;
    if (!all_equal) {
        std::printf("\nserial/parallel outputs differ\n");
        return 1;
    }
    return 0;
}
