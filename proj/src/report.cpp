#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "malgrid/errors.hpp"
#include "malgrid/eval.hpp"

// Report artifacts for a cross-validation run. All numbers are printed
// through the shortest round-trip representation (or fixed precision for
// SVG coordinates), so identical results produce byte-identical files.

namespace malgrid {

namespace {

std::string fmt(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string json_number(double v) {
    if (!std::isfinite(v)) return "null";
    return fmt(v);
}

std::string json_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
    return out;
}

// Two decimals is plenty for pixel coordinates.
std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

struct LinScale {
    double d0 = 0.0, d1 = 1.0;  // data range
    double p0 = 0.0, p1 = 1.0;  // pixel range

    double operator()(double v) const {
        if (d1 == d0) return (p0 + p1) / 2.0;
        return p0 + (v - d0) / (d1 - d0) * (p1 - p0);
    }
};

constexpr const char* kTrainColor = "#1f77b4";
constexpr const char* kValColor = "#ff7f0e";

struct Panel {
    double x0, y0, x1, y1;  // plot area in pixels, y0 is the top
};

void svg_axes(std::ostringstream& svg, const Panel& p, const LinScale& xs,
              const LinScale& ys, int epochs, const std::string& title) {
    svg << "<rect x=\"" << coord(p.x0) << "\" y=\"" << coord(p.y0) << "\" width=\""
        << coord(p.x1 - p.x0) << "\" height=\"" << coord(p.y1 - p.y0)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << coord((p.x0 + p.x1) / 2) << "\" y=\"" << coord(p.y0 - 10)
        << "\" text-anchor=\"middle\" font-size=\"13\" fill=\"#222\">" << title
        << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = ys.d0 + (ys.d1 - ys.d0) * t / 4.0;
        const double y = ys(v);
        svg << "<line x1=\"" << coord(p.x0 - 4) << "\" y1=\"" << coord(y) << "\" x2=\""
            << coord(p.x0) << "\" y2=\"" << coord(y) << "\" stroke=\"#444\"/>\n";
        svg << "<text x=\"" << coord(p.x0 - 8) << "\" y=\"" << coord(y + 4)
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"#222\">" << tick_label(v)
            << "</text>\n";
    }
    const int step = epochs > 10 ? (epochs + 9) / 10 : 1;
    for (int e = 1; e <= epochs; e += step) {
        const double x = xs(e);
        svg << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(p.y1) << "\" x2=\""
            << coord(x) << "\" y2=\"" << coord(p.y1 + 4) << "\" stroke=\"#444\"/>\n";
        svg << "<text x=\"" << coord(x) << "\" y=\"" << coord(p.y1 + 16)
            << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#222\">" << e
            << "</text>\n";
    }
    svg << "<text x=\"" << coord((p.x0 + p.x1) / 2) << "\" y=\"" << coord(p.y1 + 32)
        << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#222\">epoch</text>\n";
}

void svg_series(std::ostringstream& svg, const LinScale& xs, const LinScale& ys,
                const std::vector<double>& values, const char* color) {
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t e = 0; e < values.size(); ++e) {
        if (e) svg << ' ';
        svg << coord(xs(static_cast<double>(e + 1))) << ',' << coord(ys(values[e]));
    }
    svg << "\"/>\n";
}

std::string render_curves(const CvResult& cv) {
    const int epochs = static_cast<int>(cv.folds.front().history.epochs.size());
    const Panel loss_panel{60, 40, 440, 340};
    const Panel acc_panel{540, 40, 920, 340};

    double loss_lo = 1e300, loss_hi = -1e300, acc_lo = 1e300, acc_hi = -1e300;
    for (const FoldResult& f : cv.folds) {
        for (const EpochStats& e : f.history.epochs) {
            loss_lo = std::min({loss_lo, e.train_loss, e.val_loss});
            loss_hi = std::max({loss_hi, e.train_loss, e.val_loss});
            acc_lo = std::min({acc_lo, e.train_acc, e.val_acc});
            acc_hi = std::max({acc_hi, e.train_acc, e.val_acc});
        }
    }
    auto pad = [](double& lo, double& hi) {
        const double margin = (hi - lo) * 0.05 + 1e-9;
        lo -= margin;
        hi += margin;
    };
    pad(loss_lo, loss_hi);
    pad(acc_lo, acc_hi);

    const LinScale loss_x{1, static_cast<double>(epochs), loss_panel.x0, loss_panel.x1};
    const LinScale loss_y{loss_lo, loss_hi, loss_panel.y1, loss_panel.y0};
    const LinScale acc_x{1, static_cast<double>(epochs), acc_panel.x0, acc_panel.x1};
    const LinScale acc_y{acc_lo, acc_hi, acc_panel.y1, acc_panel.y0};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"400\" "
           "viewBox=\"0 0 960 400\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"960\" height=\"400\" fill=\"white\"/>\n";
    svg_axes(svg, loss_panel, loss_x, loss_y, epochs, "Cross-entropy loss");
    svg_axes(svg, acc_panel, acc_x, acc_y, epochs, "Accuracy");
    for (const FoldResult& f : cv.folds) {
        std::vector<double> tl, vl, ta, va;
        for (const EpochStats& e : f.history.epochs) {
            tl.push_back(e.train_loss);
            vl.push_back(e.val_loss);
            ta.push_back(e.train_acc);
            va.push_back(e.val_acc);
        }
        svg_series(svg, loss_x, loss_y, tl, kTrainColor);
        svg_series(svg, loss_x, loss_y, vl, kValColor);
        svg_series(svg, acc_x, acc_y, ta, kTrainColor);
        svg_series(svg, acc_x, acc_y, va, kValColor);
    }
    // legend
    svg << "<rect x=\"840\" y=\"46\" width=\"14\" height=\"4\" fill=\"" << kTrainColor
        << "\"/><text x=\"858\" y=\"52\" font-size=\"11\" fill=\"#222\">train</text>\n";
    svg << "<rect x=\"840\" y=\"60\" width=\"14\" height=\"4\" fill=\"" << kValColor
        << "\"/><text x=\"858\" y=\"66\" font-size=\"11\" fill=\"#222\">validation</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string render_boxplot(const CvSummary& s) {
    const Panel p{70, 40, 260, 360};
    double lo = s.min, hi = s.max;
    const double margin = (hi - lo) * 0.15 + 1e-9;
    lo -= margin;
    hi += margin;
    const LinScale y{lo, hi, p.y1, p.y0};
    const double cx = (p.x0 + p.x1) / 2;
    const double half = 40;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"330\" height=\"420\" "
           "viewBox=\"0 0 330 420\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"330\" height=\"420\" fill=\"white\"/>\n";
    svg << "<text x=\"" << coord(cx) << "\" y=\"24\" text-anchor=\"middle\" "
           "font-size=\"13\" fill=\"#222\">Fold accuracy</text>\n";
    svg << "<rect x=\"" << coord(p.x0) << "\" y=\"" << coord(p.y0) << "\" width=\""
        << coord(p.x1 - p.x0) << "\" height=\"" << coord(p.y1 - p.y0)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        svg << "<line x1=\"" << coord(p.x0 - 4) << "\" y1=\"" << coord(y(v)) << "\" x2=\""
            << coord(p.x0) << "\" y2=\"" << coord(y(v)) << "\" stroke=\"#444\"/>\n";
        svg << "<text x=\"" << coord(p.x0 - 8) << "\" y=\"" << coord(y(v) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"#222\">" << tick_label(v)
            << "</text>\n";
    }
    // whiskers
    svg << "<line x1=\"" << coord(cx) << "\" y1=\"" << coord(y(s.min)) << "\" x2=\""
        << coord(cx) << "\" y2=\"" << coord(y(s.q1)) << "\" stroke=\"#222\"/>\n";
    svg << "<line x1=\"" << coord(cx) << "\" y1=\"" << coord(y(s.q3)) << "\" x2=\""
        << coord(cx) << "\" y2=\"" << coord(y(s.max)) << "\" stroke=\"#222\"/>\n";
    for (double v : {s.min, s.max})
        svg << "<line x1=\"" << coord(cx - half / 2) << "\" y1=\"" << coord(y(v))
            << "\" x2=\"" << coord(cx + half / 2) << "\" y2=\"" << coord(y(v))
            << "\" stroke=\"#222\"/>\n";
    // box and median
    svg << "<rect x=\"" << coord(cx - half) << "\" y=\"" << coord(y(s.q3)) << "\" width=\""
        << coord(2 * half) << "\" height=\"" << coord(y(s.q1) - y(s.q3))
        << "\" fill=\"#cfe2f3\" stroke=\"#222\"/>\n";
    svg << "<line x1=\"" << coord(cx - half) << "\" y1=\"" << coord(y(s.median))
        << "\" x2=\"" << coord(cx + half) << "\" y2=\"" << coord(y(s.median))
        << "\" stroke=\"#b45309\" stroke-width=\"1.5\"/>\n";
    // mean marker
    svg << "<circle cx=\"" << coord(cx) << "\" cy=\"" << coord(y(s.mean))
        << "\" r=\"3\" fill=\"#2ca02c\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string render_history_csv(const CvResult& cv) {
    std::ostringstream csv;
    csv << "fold,epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        const auto& epochs = cv.folds[f].history.epochs;
        for (std::size_t e = 0; e < epochs.size(); ++e) {
            csv << f << ',' << e << ',' << fmt(epochs[e].train_loss) << ','
                << fmt(epochs[e].train_acc) << ',' << fmt(epochs[e].val_loss) << ','
                << fmt(epochs[e].val_acc) << '\n';
        }
    }
    return csv.str();
}

std::string render_summary_json(const CvResult& cv, const CvConfig& cfg,
                                const std::vector<std::string>& class_names) {
    std::ostringstream js;
    js << "{\n";
    js << "  \"config\": {\n";
    js << "    \"arch\": " << json_quote(arch_name(cfg.arch)) << ",\n";
    js << "    \"input_side\": " << cfg.input_side << ",\n";
    js << "    \"folds\": " << cfg.folds << ",\n";
    js << "    \"stratified\": " << (cfg.stratified ? "true" : "false") << ",\n";
    js << "    \"lr\": " << json_number(cfg.train.lr) << ",\n";
    js << "    \"momentum\": " << json_number(cfg.train.momentum) << ",\n";
    js << "    \"epochs\": " << cfg.train.epochs << ",\n";
    js << "    \"batch_size\": " << cfg.train.batch_size << ",\n";
    js << "    \"seed\": " << cfg.train.seed << "\n";
    js << "  },\n";
    js << "  \"class_names\": [";
    for (std::size_t i = 0; i < class_names.size(); ++i)
        js << (i ? ", " : "") << json_quote(class_names[i]);
    js << "],\n";
    js << "  \"folds\": [\n";
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        const FoldResult& fr = cv.folds[f];
        const EpochStats& last = fr.history.epochs.back();
        js << "    {\"fold\": " << f << ", \"accuracy\": " << json_number(fr.accuracy)
           << ", \"val_loss\": " << json_number(last.val_loss)
           << ", \"train_loss\": " << json_number(last.train_loss)
           << ", \"train_acc\": " << json_number(last.train_acc)
           << ", \"train_size\": " << fr.indices.train.size()
           << ", \"val_size\": " << fr.indices.val.size() << "}"
           << (f + 1 < cv.folds.size() ? "," : "") << "\n";
    }
    js << "  ],\n";
    const CvSummary& s = cv.summary;
    js << "  \"stats\": {\n";
    js << "    \"mean\": " << json_number(s.mean) << ",\n";
    js << "    \"stddev\": " << json_number(s.stddev) << ",\n";
    js << "    \"min\": " << json_number(s.min) << ",\n";
    js << "    \"q1\": " << json_number(s.q1) << ",\n";
    js << "    \"median\": " << json_number(s.median) << ",\n";
    js << "    \"q3\": " << json_number(s.q3) << ",\n";
    js << "    \"max\": " << json_number(s.max) << "\n";
    js << "  }\n";
    js << "}\n";
    return js.str();
}

}  // namespace

void emit_reports(const std::filesystem::path& out_dir, const CvResult& cv,
                  const CvConfig& cfg, const std::vector<std::string>& class_names) {
    if (cv.folds.empty() || cv.folds.front().history.epochs.empty())
        throw std::invalid_argument("nothing to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    write_text_file(out_dir / "history.csv", render_history_csv(cv));
    write_text_file(out_dir / "summary.json", render_summary_json(cv, cfg, class_names));
    write_text_file(out_dir / "curves.svg", render_curves(cv));
    write_text_file(out_dir / "boxplot.svg", render_boxplot(cv.summary));
}

}  // namespace malgrid
