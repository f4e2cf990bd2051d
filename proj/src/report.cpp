#include "mld/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mld {

std::string format_number(double value) {
    if (std::isnan(value)) return "NA";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buffer, end);
}

std::string format_number(std::optional<double> value) { return value ? format_number(*value) : "NA"; }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string samples_csv(DesignKind design, Level level, const LevelResult& result) {
    std::string out(kSamplesHeader);
    out += '\n';
    for (std::size_t r = 0; r < result.by_replicate.size(); ++r) {
        const auto& v = result.by_replicate[r];
        out += std::to_string(r);
        out += ',';
        out += to_string(level);
        out += ',';
        out += to_string(design);
        out += ',';
        out += format_number(v);
        out += v ? ",1\n" : ",0\n";
    }
    return out;
}

std::string density_csv(DesignKind design, Level level, const Density& density) {
    std::string out(kDensityHeader);
    out += '\n';
    const std::string prefix = std::string(to_string(level)) + "," + std::string(to_string(design)) + ",";
    if (density.point_mass) {
        out += prefix + format_number(density.point) + ",inf\n";
        return out;
    }
    for (std::size_t k = 0; k < density.x.size(); ++k)
        out += prefix + format_number(density.x[k]) + "," + format_number(density.y[k]) + "\n";
    return out;
}

std::string summary_row(DesignKind design, Level level, const LevelResult& result) {
    const std::size_t total = result.by_replicate.size();
    const bool any = !result.samples.empty();
    std::string out;
    out += to_string(design);
    out += ',';
    out += to_string(level);
    out += ',';
    out += any ? format_number(result.mean) : "NA";
    out += ',';
    out += any ? format_number(result.sd) : "NA";
    out += ',';
    out += any ? format_number(2.0 * std::sqrt(result.mean)) : "NA";
    out += ',';
    out += format_number(result.power);
    out += ',';
    out += total ? format_number(static_cast<double>(result.non_estimable) / static_cast<double>(total)) : "NA";
    out += '\n';
    return out;
}

namespace {

constexpr double kPanelWidth = 560.0;
constexpr double kPanelHeight = 400.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 55.0;
constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string fixed(double v) {
    char buffer[48];
    std::snprintf(buffer, sizeof(buffer), "%.2f", v);
    return buffer;
}

std::string tick_label(double v) {
    char buffer[48];
    std::snprintf(buffer, sizeof(buffer), "%.4g", v);
    return buffer;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

void render_panel(std::ostringstream& svg, const DensityPanel& panel, double offset_x) {
    double x_lo = std::numeric_limits<double>::infinity();
    double x_hi = -x_lo;
    double y_hi = 0.0;
    for (const auto& curve : panel.curves) {
        const Density& d = curve.density;
        if (d.point_mass) {
            x_lo = std::min(x_lo, d.point);
            x_hi = std::max(x_hi, d.point);
            continue;
        }
        for (std::size_t k = 0; k < d.x.size(); ++k) {
            x_lo = std::min(x_lo, d.x[k]);
            x_hi = std::max(x_hi, d.x[k]);
            y_hi = std::max(y_hi, d.y[k]);
        }
    }
    if (!std::isfinite(x_lo)) {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    if (x_hi <= x_lo) {
        const double pad = x_lo == 0.0 ? 1.0 : 0.1 * std::abs(x_lo);
        x_lo -= pad;
        x_hi += pad;
    }
    if (y_hi <= 0.0) y_hi = 1.0;
    y_hi *= 1.05;

    const double plot_w = kPanelWidth - kLeft - kRight;
    const double plot_h = kPanelHeight - kTop - kBottom;
    const double x0 = offset_x + kLeft;
    const double y0 = kTop + plot_h;
    auto sx = [&](double x) { return x0 + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto sy = [&](double y) { return y0 - y / y_hi * plot_h; };

    svg << "<g class=\"panel\">\n";
    svg << "<text x=\"" << fixed(x0 + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(panel.title) << "</text>\n";
    svg << "<line class=\"axis\" x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(x0 + plot_w)
        << "\" y2=\"" << fixed(y0) << "\" stroke=\"black\"/>\n";
    svg << "<line class=\"axis\" x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(x0)
        << "\" y2=\"" << fixed(kTop) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
        const double yv = y_hi * t / 4.0;
        svg << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << fixed(y0 + 16) << "\" text-anchor=\"middle\" "
            << "font-size=\"10\">" << tick_label(xv) << "</text>\n";
        svg << "<text x=\"" << fixed(x0 - 6) << "\" y=\"" << fixed(sy(yv) + 3) << "\" text-anchor=\"end\" "
            << "font-size=\"10\">" << tick_label(yv) << "</text>\n";
    }
    svg << "<text x=\"" << fixed(x0 + plot_w / 2) << "\" y=\"" << fixed(kPanelHeight - 12)
        << "\" text-anchor=\"middle\" font-size=\"12\">anticipated variance</text>\n";
    svg << "<text transform=\"translate(" << fixed(offset_x + 16) << "," << fixed(kTop + plot_h / 2)
        << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">density</text>\n";

    for (std::size_t i = 0; i < panel.curves.size(); ++i) {
        const auto& curve = panel.curves[i];
        const char* colour = kPalette[i % std::size(kPalette)];
        const std::string label = escape(curve.label);
        if (curve.density.point_mass) {
            const double px = sx(curve.density.point);
            svg << "<line class=\"point-mass\" data-label=\"" << label << "\" data-value=\""
                << format_number(curve.density.point) << "\" x1=\"" << fixed(px) << "\" y1=\"" << fixed(y0)
                << "\" x2=\"" << fixed(px) << "\" y2=\"" << fixed(kTop) << "\" stroke=\"" << colour
                << "\" stroke-width=\"2\" stroke-dasharray=\"6,3\"/>\n";
        } else if (!curve.density.x.empty()) {
            svg << "<polyline class=\"density-curve\" data-label=\"" << label << "\" fill=\"none\" stroke=\""
                << colour << "\" stroke-width=\"1.8\" points=\"";
            for (std::size_t k = 0; k < curve.density.x.size(); ++k) {
                if (k) svg << ' ';
                svg << fixed(sx(curve.density.x[k])) << ',' << fixed(sy(curve.density.y[k]));
            }
            svg << "\"/>\n";
        }
        const double ly = kTop + 8 + 16.0 * static_cast<double>(i);
        const double lx = x0 + plot_w - 150;
        svg << "<rect class=\"legend-key\" x=\"" << fixed(lx) << "\" y=\"" << fixed(ly - 8) << "\" width=\"14\" "
            << "height=\"4\" fill=\"" << colour << "\"/>\n";
        svg << "<text class=\"legend\" x=\"" << fixed(lx + 20) << "\" y=\"" << fixed(ly - 3)
            << "\" font-size=\"11\">" << label << "</text>\n";
    }
    svg << "</g>\n";
}

}  // namespace

std::string render_density_svg(const std::vector<DensityPanel>& panels) {
    bool any_curve = false;
    for (const auto& p : panels)
        for (const auto& c : p.curves)
            if (!c.density.empty()) any_curve = true;
    if (!any_curve) throw std::invalid_argument("density plot needs at least one curve or point mass");

    std::ostringstream svg;
    const double width = kPanelWidth * static_cast<double>(panels.size());
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width) << "\" height=\""
        << fixed(kPanelHeight) << "\" viewBox=\"0 0 " << fixed(width) << ' ' << fixed(kPanelHeight) << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) render_panel(svg, panels[i], kPanelWidth * static_cast<double>(i));
    svg << "</svg>\n";
    return svg.str();
}

void emit_density_svg(const std::vector<DensityPanel>& panels, const std::filesystem::path& path) {
    const std::string content = render_density_svg(panels);
    write_file_atomic(path, content);
}

}  // namespace mld
