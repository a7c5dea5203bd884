#include "mmtsm/report/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>

#include "mmtsm/data/image.hpp"

namespace mmtsm {

namespace {

// 5x7 glyphs, 7 rows of 5 columns concatenated, '#' = on.
const std::unordered_map<char, const char*>& font() {
  static const std::unordered_map<char, const char*> f = {
      {'0', ".###.#...##..###.#.###..##...#.###."},
      {'1', "..#...##....#....#....#....#...###."},
      {'2', ".###.#...#....#...#...#...#...#####"},
      {'3', "#####...#...#.....#.....##...#.###."},
      {'4', "...#...##..#.#.#..#.#####...#....#."},
      {'5', "######....####.....#....##...#.###."},
      {'6', "..##..#...#....####.#...##...#.###."},
      {'7', "#####....#...#...#...#....#....#..."},
      {'8', ".###.#...##...#.###.#...##...#.###."},
      {'9', ".###.#...##...#.####....#...#..##.."},
      {'.', "..........................##...##.."},
      {'-', "...............#####..............."},
      {'_', "..............................#####"},
      {'%', "##...##..#...#...#...#...#..##...##"},
      {'/', "....#....#...#...#...#...#....#...."},
      {':', "......##...##........##...##......."},
      {'=', "..........#####.....#####.........."},
      {' ', "..................................."},
      {'a', "...........###.....#.#####...#.####"},
      {'b', "#....#....#.##.##..##...##...#####."},
      {'c', "...........###.#....#....#...#.###."},
      {'d', "....#....#.##.##..###...##...#.####"},
      {'e', "...........###.#...#######.....###."},
      {'f', "..##..#..#.#...###...#....#....#..."},
      {'g', "......#####...##...#.####....#.###."},
      {'h', "#....#....#.##.##..##...##...##...#"},
      {'i', "..#........##....#....#....#...###."},
      {'j', "...#........##....#....#.#..#..##.."},
      {'k', "#....#....#..#.#.#..##...#.#..#..#."},
      {'l', ".##....#....#....#....#....#...###."},
      {'m', "..........##.#.#.#.##.#.##.#.##.#.#"},
      {'n', "..........#.##.##..##...##...##...#"},
      {'o', "...........###.#...##...##...#.###."},
      {'p', "..........####.#...#####.#....#...."},
      {'q', "...........##.##..##.####....#....#"},
      {'r', "..........#.##.##..##....#....#...."},
      {'s', "...........#####.....###.....#####."},
      {'t', ".#....#...###...#....#....#..#..##."},
      {'u', "..........#...##...##...##..##.##.#"},
      {'v', "..........#...##...##...#.#.#...#.."},
      {'w', "..........#...##.#.##.#.##.#.#.#.#."},
      {'x', "..........#...#.#.#...#...#.#.#...#"},
      {'y', "..........#...##...#.####....#.###."},
      {'z', "..........#####...#...#...#...#####"},
  };
  return f;
}

struct Rgb {
  std::uint8_t r, g, b;
};

struct Canvas {
  int w, h;
  std::vector<std::uint8_t> px;

  Canvas(int width, int height, Rgb bg) : w(width), h(height), px(width * height * 3) {
    for (int i = 0; i < w * h; ++i) {
      px[3 * i] = bg.r;
      px[3 * i + 1] = bg.g;
      px[3 * i + 2] = bg.b;
    }
  }
  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const int i = 3 * (y * w + x);
    px[i] = c.r;
    px[i + 1] = c.g;
    px[i + 2] = c.b;
  }
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y, c);
  }
  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
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
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) set(x + dx, y + dy, c);
  }
  void text(int x, int y, const std::string& s, Rgb c) {
    const auto& f = font();
    int cx = x;
    for (char raw : s) {
      const char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
      auto it = f.find(ch);
      if (it != f.end()) {
        const char* g = it->second;
        for (int r = 0; r < 7; ++r)
          for (int col = 0; col < 5; ++col)
            if (g[r * 5 + col] == '#') set(cx + col, y + r, c);
      }
      cx += 6;
    }
  }

  Image to_image() const {
    Image img;
    img.width = w;
    img.height = h;
    img.channels = 3;
    img.data = px;
    return img;
  }
};

std::string fmt_num(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

const Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44},
                        {255, 127, 14}, {148, 103, 189}};

}  // namespace

void write_line_chart(const std::string& path, const std::vector<PlotSeries>& series,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label, int width, int height) {
  if (series.empty()) throw std::invalid_argument("plot: no series");
  Real xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot: x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (first) throw std::invalid_argument("plot: empty series");
  if (xmax == xmin) {
    xmin -= 1;
    xmax += 1;
  }
  const Real ypad = (ymax == ymin) ? std::max<Real>(std::abs(ymax) * 0.1, 0.1)
                                   : 0.08 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const Rgb bg{255, 255, 255}, axis{40, 40, 40}, grid{225, 225, 225};
  Canvas cv(width, height, bg);
  const int left = 56, right = width - 14, top = 26, bottom = height - 34;

  auto px = [&](Real x) {
    return left + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (right - left)));
  };
  auto py = [&](Real y) {
    return bottom - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (bottom - top)));
  };

  for (int t = 0; t <= 4; ++t) {
    const Real yv = ymin + (ymax - ymin) * t / 4;
    const int y = py(yv);
    cv.line(left, y, right, y, grid);
    const std::string lab = fmt_num(yv);
    cv.text(left - 6 - 6 * static_cast<int>(lab.size()), y - 3, lab, axis);
  }
  const int xticks = 5;
  for (int t = 0; t <= xticks; ++t) {
    const Real xv = xmin + (xmax - xmin) * t / xticks;
    const int x = px(xv);
    cv.line(x, top, x, bottom, grid);
    const std::string lab = fmt_num(xv);
    cv.text(x - 3 * static_cast<int>(lab.size()), bottom + 6, lab, axis);
  }
  cv.line(left, top, left, bottom, axis);
  cv.line(left, bottom, right, bottom, axis);
  cv.text(left, 8, title, axis);
  cv.text((left + right) / 2 - 3 * static_cast<int>(x_label.size()), height - 12, x_label, axis);
  cv.text(4, top - 12 < 8 ? 8 : top - 12, y_label, axis);

  int legend_x = right - 10;
  for (std::size_t si = series.size(); si-- > 0;)
    legend_x -= 16 + 6 * static_cast<int>(series[si].name.size());
  int lx = std::max(legend_x, left + 4);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const Rgb c = kPalette[si % 5];
    cv.fill_rect(lx, 10, lx + 8, 16, c);
    cv.text(lx + 12, 9, series[si].name, axis);
    lx += 16 + 6 * static_cast<int>(series[si].name.size());

    const auto& s = series[si];
    for (std::size_t i = 0; i + 1 < s.x.size(); ++i)
      cv.line(px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), c);
    for (std::size_t i = 0; i < s.x.size(); ++i) cv.dot(px(s.x[i]), py(s.y[i]), c);
  }

  write_png(path, cv.to_image());
}

void write_confusion_png(const std::string& path,
                         const std::vector<std::vector<int>>& confusion, int cell) {
  const int k = static_cast<int>(confusion.size());
  if (k == 0) throw std::invalid_argument("plot: empty confusion matrix");
  int mx = 1;
  for (const auto& row : confusion)
    for (int v : row) mx = std::max(mx, v);

  const int border = 2;
  Canvas cv(k * cell + 2 * border, k * cell + 2 * border, {255, 255, 255});
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const Real t = static_cast<Real>(confusion[i][j]) / mx;
      const auto ch = static_cast<std::uint8_t>(std::lround(255 * (1 - t)));
      const Rgb c{ch, ch, 255};
      cv.fill_rect(border + j * cell, border + i * cell, border + (j + 1) * cell - 2,
                   border + (i + 1) * cell - 2, c);
    }
  write_png(path, cv.to_image());
}

}  // namespace mmtsm
