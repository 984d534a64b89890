#include "ctbench/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "ctbench/errors.hpp"
#include "ctbench/io.hpp"

namespace ctbench {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
struct Glyph {
    char ch;
    std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
    {'*', {0x00, 0x0A, 0x04, 0x1F, 0x04, 0x0A, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {'^', {0x04, 0x0A, 0x11, 0x00, 0x00, 0x00, 0x00}},
};

const std::uint8_t* glyph_rows(char c) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    for (const auto& g : kFont)
        if (g.ch == c) return g.rows;
    return kFont[0].rows; // unknown characters render blank
}

int text_width(const std::string& s) {
    return s.empty() ? 0 : 6 * static_cast<int>(s.size()) - 1;
}

class Canvas {
public:
    Canvas(int w, int h) : w_(w), h_(h), px_(3u * w * h, 255) {}

    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
        std::uint8_t* p = &px_[3 * (static_cast<std::size_t>(y) * w_ + x)];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }

    void hline(int x0, int x1, int y, Rgb c) {
        for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
    }

    void vline(int x, int y0, int y1, Rgb c) {
        for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
    }

    void line(int x0, int y0, int x1, int y1, Rgb c, bool thick = false) {
        const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            set(x0, y0, c);
            if (thick) set(x0, y0 + 1, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void dot(int x, int y, Rgb c) {
        for (int oy = -1; oy <= 1; ++oy)
            for (int ox = -1; ox <= 1; ++ox) set(x + ox, y + oy, c);
    }

    void text(int x, int y, const std::string& s, Rgb c) {
        for (char ch : s) {
            const std::uint8_t* rows = glyph_rows(ch);
            for (int r = 0; r < 7; ++r)
                for (int col = 0; col < 5; ++col)
                    if (rows[r] & (1 << (4 - col))) set(x + col, y + r, c);
            x += 6;
        }
    }

    /// Text running bottom-to-top; (x, y) is the top-left of the rotated box.
    void vtext(int x, int y, const std::string& s, Rgb c) {
        const int len = text_width(s);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::uint8_t* rows = glyph_rows(s[i]);
            const int u0 = 6 * static_cast<int>(i);
            for (int r = 0; r < 7; ++r)
                for (int col = 0; col < 5; ++col)
                    if (rows[r] & (1 << (4 - col)))
                        set(x + r, y + (len - 1 - (u0 + col)), c);
        }
    }

    void fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
        for (int y = y0; y <= y1; ++y) hline(x0, x1, y, c);
    }

    const std::vector<std::uint8_t>& pixels() const { return px_; }

private:
    int w_, h_;
    std::vector<std::uint8_t> px_;
};

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Tick step of the form {1,2,5}*10^k giving roughly `target` ticks.
double nice_step(double range, int target) {
    const double raw = range / std::max(1, target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    if (r < 1.5) return mag;
    if (r < 3.5) return 2 * mag;
    if (r < 7.5) return 5 * mag;
    return 10 * mag;
}

struct Tick {
    double value; ///< position in (possibly log-transformed) axis units
    std::string label;
};

std::vector<Tick> linear_ticks(double lo, double hi, int target) {
    std::vector<Tick> ticks;
    const double step = nice_step(hi - lo, target);
    double t = std::ceil(lo / step - 1e-9) * step;
    for (; t <= hi + 1e-9 * step; t += step) {
        const double v = std::abs(t) < step * 1e-6 ? 0.0 : t;
        ticks.push_back({v, fmt_tick(v)});
    }
    return ticks;
}

std::vector<Tick> log_ticks(double lo, double hi) {
    std::vector<Tick> ticks;
    for (int e = static_cast<int>(std::floor(lo)) - 1; e <= static_cast<int>(std::ceil(hi)); ++e)
        for (int m : {1, 2, 5}) {
            const double t = e + std::log10(static_cast<double>(m));
            if (t < lo - 1e-9 || t > hi + 1e-9) continue;
            ticks.push_back({t, fmt_tick(m * std::pow(10.0, e))});
        }
    // plenty of decades: keep only the 10^e ticks
    int decades = 0;
    for (const auto& t : ticks)
        if (t.label[0] == '1' && (t.label.size() == 1 || t.label[1] != '.')) ++decades;
    if (decades >= 4) {
        std::vector<Tick> only;
        for (auto& t : ticks) {
            const double frac = t.value - std::floor(t.value + 0.5);
            if (std::abs(frac) < 1e-9) only.push_back(std::move(t));
        }
        return only;
    }
    return ticks;
}

} // namespace

void write_line_plot_png(const std::vector<PlotSeries>& series, const PlotOptions& opt,
                         const std::filesystem::path& path) {
    if (opt.width < 200 || opt.height < 150) throw DataError("plot canvas too small");
    if (series.empty()) throw DataError("no series to plot");

    // Transformed, finite samples per series; log_y drops non-positives.
    struct Pt {
        double x, y;
    };
    std::vector<std::vector<Pt>> pts(series.size());
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (std::size_t s = 0; s < series.size(); ++s) {
        if (series[s].x.size() != series[s].y.size())
            throw DataError("series x/y length mismatch");
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            double x = series[s].x[i], y = series[s].y[i];
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (opt.log_y) {
                if (!(y > 0.0)) continue;
                y = std::log10(y);
            }
            pts[s].push_back({x, y});
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    }
    if (!std::isfinite(xlo)) throw DataError("no plottable samples");
    if (xhi - xlo < 1e-12) {
        xlo -= 1.0;
        xhi += 1.0;
    }
    if (yhi - ylo < 1e-12) {
        ylo -= 1.0;
        yhi += 1.0;
    }
    const double ypad = 0.04 * (yhi - ylo);
    ylo -= ypad;
    yhi += ypad;

    const int L = 70, R = 20, T = 30, B = 50;
    const int pw = opt.width - L - R, ph = opt.height - T - B;
    Canvas cv(opt.width, opt.height);

    const Rgb black{30, 30, 30}, frame{150, 150, 150}, grid{232, 232, 232};

    const auto px_of = [&](double x) {
        return L + static_cast<int>(std::lround((x - xlo) / (xhi - xlo) * (pw - 1)));
    };
    const auto py_of = [&](double y) {
        return T + ph - 1 - static_cast<int>(std::lround((y - ylo) / (yhi - ylo) * (ph - 1)));
    };

    // grid + ticks + tick labels
    const auto xticks = linear_ticks(xlo, xhi, 6);
    const auto yticks = opt.log_y ? log_ticks(ylo, yhi) : linear_ticks(ylo, yhi, 5);
    for (const auto& t : xticks) {
        const int x = px_of(t.value);
        cv.vline(x, T, T + ph - 1, grid);
        cv.vline(x, T + ph, T + ph + 3, black);
        cv.text(x - text_width(t.label) / 2, T + ph + 7, t.label, black);
    }
    for (const auto& t : yticks) {
        const int y = py_of(t.value);
        cv.hline(L, L + pw - 1, y, grid);
        cv.hline(L - 4, L - 1, y, black);
        cv.text(L - 7 - text_width(t.label), y - 3, t.label, black);
    }

    // frame
    cv.hline(L, L + pw - 1, T, frame);
    cv.hline(L, L + pw - 1, T + ph - 1, black);
    cv.vline(L, T, T + ph - 1, black);
    cv.vline(L + pw - 1, T, T + ph - 1, frame);

    // series
    for (std::size_t s = 0; s < series.size(); ++s) {
        const Rgb c = series[s].color;
        if (pts[s].size() == 1) {
            cv.dot(px_of(pts[s][0].x), py_of(pts[s][0].y), c);
            continue;
        }
        for (std::size_t i = 1; i < pts[s].size(); ++i)
            cv.line(px_of(pts[s][i - 1].x), py_of(pts[s][i - 1].y), px_of(pts[s][i].x),
                    py_of(pts[s][i].y), c, true);
    }

    // labels
    if (!opt.title.empty())
        cv.text(L + (pw - text_width(opt.title)) / 2, (T - 7) / 2, opt.title, black);
    if (!opt.x_label.empty())
        cv.text(L + (pw - text_width(opt.x_label)) / 2, opt.height - 14, opt.x_label, black);
    if (!opt.y_label.empty()) cv.vtext(8, T + (ph - text_width(opt.y_label)) / 2, opt.y_label, black);

    // legend, top-right inside the frame
    std::vector<std::size_t> labeled;
    for (std::size_t s = 0; s < series.size(); ++s)
        if (!series[s].label.empty()) labeled.push_back(s);
    if (!labeled.empty()) {
        int wmax = 0;
        for (std::size_t s : labeled) wmax = std::max(wmax, text_width(series[s].label));
        const int lw = 24 + wmax + 6, lh = 6 + 12 * static_cast<int>(labeled.size());
        const int lx = L + pw - 6 - lw, ly = T + 6;
        cv.fill_rect(lx, ly, lx + lw, ly + lh, Rgb{255, 255, 255});
        cv.hline(lx, lx + lw, ly, frame);
        cv.hline(lx, lx + lw, ly + lh, frame);
        cv.vline(lx, ly, ly + lh, frame);
        cv.vline(lx + lw, ly, ly + lh, frame);
        for (std::size_t i = 0; i < labeled.size(); ++i) {
            const int ty = ly + 5 + 12 * static_cast<int>(i);
            cv.hline(lx + 4, lx + 18, ty + 3, series[labeled[i]].color);
            cv.hline(lx + 4, lx + 18, ty + 4, series[labeled[i]].color);
            cv.text(lx + 24, ty, series[labeled[i]].label, black);
        }
    }

    write_png_rgb8(path, opt.width, opt.height, cv.pixels());
}

} // namespace ctbench
