#include "dstg/report.hpp"

#include <zlib.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dstg/metrics.hpp"
#include "dstg/trainer.hpp"

namespace dstg {

Image::Image(int w, int h, unsigned char r, unsigned char g, unsigned char b)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
}

void Image::set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t at = 3 * (static_cast<std::size_t>(y) * width + x);
  rgb[at] = r;
  rgb[at + 1] = g;
  rgb[at + 2] = b;
}

void Image::fill_rect(int x0, int y0, int x1, int y1, unsigned char r,
                      unsigned char g, unsigned char b) {
  for (int y = std::max(0, y0); y < std::min(height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(width, x1); ++x) set(x, y, r, g, b);
}

void Image::outline_rect(int x0, int y0, int x1, int y1, int thickness,
                         unsigned char r, unsigned char g, unsigned char b) {
  for (int t = 0; t < thickness; ++t) {
    for (int x = x0; x <= x1; ++x) {
      set(x, y0 + t, r, g, b);
      set(x, y1 - t, r, g, b);
    }
    for (int y = y0; y <= y1; ++y) {
      set(x0 + t, y, r, g, b);
      set(x1 - t, y, r, g, b);
    }
  }
}

namespace {

// 3x5 glyphs, row-major bits, for "0123456789.".
const std::map<char, std::array<unsigned char, 5>>& glyphs() {
  static const std::map<char, std::array<unsigned char, 5>> g = {
      {'0', {0b111, 0b101, 0b101, 0b101, 0b111}},
      {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
      {'2', {0b111, 0b001, 0b111, 0b100, 0b111}},
      {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
      {'4', {0b101, 0b101, 0b111, 0b001, 0b001}},
      {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
      {'6', {0b111, 0b100, 0b111, 0b101, 0b111}},
      {'7', {0b111, 0b001, 0b010, 0b010, 0b010}},
      {'8', {0b111, 0b101, 0b111, 0b101, 0b111}},
      {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
      {'.', {0b000, 0b000, 0b000, 0b000, 0b010}},
  };
  return g;
}

}  // namespace

void Image::draw_number(int x, int y, Scalar value, unsigned char r,
                        unsigned char g, unsigned char b) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  int cx = x;
  for (const char* p = buf; *p; ++p) {
    auto it = glyphs().find(*p);
    if (it != glyphs().end()) {
      for (int row = 0; row < 5; ++row)
        for (int col = 0; col < 3; ++col)
          if (it->second[static_cast<std::size_t>(row)] & (1 << (2 - col)))
            set(cx + col, y + row, r, g, b);
    }
    cx += 4;
  }
}

void Image::blit(const Image& src, int x, int y) {
  for (int sy = 0; sy < src.height; ++sy)
    for (int sx = 0; sx < src.width; ++sx) {
      const std::size_t at = 3 * (static_cast<std::size_t>(sy) * src.width + sx);
      set(x + sx, y + sy, src.rgb[at], src.rgb[at + 1], src.rgb[at + 2]);
    }
}

namespace {

void push_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void push_chunk(std::string& out, const char type[4], const std::string& data) {
  push_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  push_u32(out, static_cast<std::uint32_t>(
                    crc32(0, reinterpret_cast<const Bytef*>(body.data()),
                          static_cast<uInt>(body.size()))));
}

std::string encode_png(const Image& img) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + 3 * img.width));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back('\0');  // filter type none
    raw.append(reinterpret_cast<const char*>(
                   img.rgb.data() + 3 * static_cast<std::size_t>(y) * img.width),
               3 * static_cast<std::size_t>(img.width));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string deflated(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(deflated.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png deflate failed");
  deflated.resize(bound);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  push_u32(ihdr, static_cast<std::uint32_t>(img.width));
  push_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  push_chunk(png, "IHDR", ihdr);
  push_chunk(png, "IDAT", deflated);
  push_chunk(png, "IEND", "");
  return png;
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::string png = encode_png(img);
  out.write(png.data(), static_cast<std::streamsize>(png.size()));
}

std::string png_content_hash(const Image& img) { return hash_hex(encode_png(img)); }

namespace {

struct Rgb {
  unsigned char r, g, b;
};

Rgb color_rgb(Color c) {
  switch (c) {
    case Color::red: return {200, 60, 60};
    case Color::blue: return {70, 90, 200};
    case Color::green: return {60, 170, 80};
    case Color::yellow: return {210, 200, 70};
    case Color::black: return {25, 25, 25};
    case Color::white: return {230, 230, 230};
    case Color::orange: return {230, 140, 50};
    case Color::purple: return {150, 70, 190};
  }
  return {128, 128, 128};
}

constexpr Rgb kGtGreen{0, 255, 0};
constexpr Rgb kPredBlue{40, 120, 255};
constexpr Rgb kPredRed{255, 40, 40};

}  // namespace

Image render_frame(const VideoSample& s, int frame,
                   const std::vector<std::pair<const Tube*, bool>>& tubes_ok,
                   const std::vector<BoxTrack>& gt_tracks,
                   const std::map<FrameRegion, Scalar>& scores) {
  if (frame < 0 || frame >= s.num_frames) {
    Image tile(s.width, s.height, 70, 70, 70);  // placeholder
    return tile;
  }
  Image img(s.width, s.height, 28, 30, 36);
  // Scene content: objects drawn in their own color, background boxes dim.
  for (const auto& reg : s.regions[static_cast<std::size_t>(frame)]) {
    if (reg.source != RegionSource::ground_truth) continue;
    const SceneObject* obj = s.object_by_id(reg.object_id);
    const Rgb c = obj ? color_rgb(obj->appearance.color) : Rgb{90, 90, 90};
    img.fill_rect(static_cast<int>(reg.box.x0), static_cast<int>(reg.box.y0),
                  static_cast<int>(reg.box.x1), static_cast<int>(reg.box.y1), c.r,
                  c.g, c.b);
  }
  for (const auto& track : gt_tracks) {
    if (auto b = track.at_frame(frame)) {
      img.outline_rect(static_cast<int>(b->x0), static_cast<int>(b->y0),
                       static_cast<int>(b->x1), static_cast<int>(b->y1), 2,
                       kGtGreen.r, kGtGreen.g, kGtGreen.b);
    }
  }
  for (const auto& [tube, ok] : tubes_ok) {
    const Rgb c = ok ? kPredBlue : kPredRed;
    for (const auto& [f, r] : tube->entries) {
      if (f != frame) continue;
      const Box& b =
          s.regions[static_cast<std::size_t>(f)][static_cast<std::size_t>(r)].box;
      img.outline_rect(static_cast<int>(b.x0), static_cast<int>(b.y0),
                       static_cast<int>(b.x1), static_cast<int>(b.y1), 1, c.r, c.g,
                       c.b);
      auto it = scores.find({f, r});
      if (it != scores.end())
        img.draw_number(static_cast<int>(b.x0) + 2, static_cast<int>(b.y0) + 2,
                        it->second, 255, 255, 255);
    }
  }
  return img;
}

Image render_timeline(int num_frames, const std::vector<BoxTrack>& gt_tracks,
                      const std::vector<std::pair<const Tube*, bool>>& tubes_ok,
                      int width) {
  const int row_h = 6;
  const int rows = static_cast<int>(gt_tracks.size() + tubes_ok.size());
  Image img(width, std::max(1, rows * row_h + 2), 20, 20, 24);
  const Scalar px = static_cast<Scalar>(width) / std::max(1, num_frames);
  int row = 0;
  for (const auto& track : gt_tracks) {
    for (const auto& [s0, s1] : track.segments())
      img.fill_rect(static_cast<int>(s0 * px), 1 + row * row_h,
                    static_cast<int>(s1 * px), 1 + row * row_h + row_h - 2,
                    kGtGreen.r, kGtGreen.g, kGtGreen.b);
    ++row;
  }
  for (const auto& [tube, ok] : tubes_ok) {
    const Rgb c = ok ? kPredBlue : kPredRed;
    for (const auto& [s0, s1] : tube->segments)
      img.fill_rect(static_cast<int>(s0 * px), 1 + row * row_h,
                    static_cast<int>(s1 * px), 1 + row * row_h + row_h - 2, c.r,
                    c.g, c.b);
    ++row;
  }
  return img;
}

namespace {

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void emit_report(const std::string& out_dir,
                 const std::vector<GroundingResult>& predictions,
                 const std::vector<VideoSample>& samples,
                 const RunManifest& manifest) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::map<std::string, const VideoSample*> by_id;
  for (const auto& s : samples) by_id[s.video_id] = &s;

  std::map<std::pair<std::string, int>, const GroundingResult*> pred_index;
  for (const auto& p : predictions) pred_index[{p.video_id, p.expression_idx}] = &p;

  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
       << "<title>grounding report</title>\n"
       << "<style>body{font-family:monospace;background:#111;color:#ddd}"
       << "img{image-rendering:pixelated;border:1px solid #333}"
       << ".case{margin-bottom:24px}</style></head><body>\n"
       << "<h1>grounding report</h1>\n"
       << "<!-- manifest: " << manifest.to_json().dump() << " -->\n";

  static const GroundingResult kEmpty{};
  for (const auto& s : samples) {
    for (std::size_t e = 0; e < s.expressions.size(); ++e) {
      const ReferringCase& rc = s.expressions[e];
      const GroundingResult* pred = &kEmpty;
      auto it = pred_index.find({s.video_id, static_cast<int>(e)});
      if (it != pred_index.end()) pred = it->second;

      std::vector<BoxTrack> gt_tracks;
      for (const auto& tube : rc.target_tubes) {
        BoxTrack track;
        for (const auto& [f, r] : tube.entries)
          track.entries.emplace_back(
              f, s.regions[static_cast<std::size_t>(f)][static_cast<std::size_t>(r)].box);
        gt_tracks.push_back(std::move(track));
      }

      // Per-tube pass/fail against the best-matching GT tube.
      std::vector<std::pair<const Tube*, bool>> tubes_ok;
      Scalar case_viou = 0;
      {
        std::vector<std::vector<Scalar>> w(pred->tubes.size(),
                                           std::vector<Scalar>(gt_tracks.size(), 0.0));
        for (std::size_t i = 0; i < pred->tubes.size(); ++i) {
          const BoxTrack track = tube_to_track(pred->tubes[i], s);
          for (std::size_t jt = 0; jt < gt_tracks.size(); ++jt)
            w[i][jt] = tube_viou(track, gt_tracks[jt]);
        }
        std::vector<int> assign;
        if (!pred->tubes.empty() && !gt_tracks.empty()) assign = best_assignment(w);
        Scalar total = 0;
        for (std::size_t i = 0; i < pred->tubes.size(); ++i) {
          const Scalar v = (i < assign.size() && assign[i] >= 0) ? w[i][assign[i]] : 0.0;
          tubes_ok.emplace_back(&pred->tubes[i], v >= 0.3);
          total += v;
        }
        case_viou = gt_tracks.empty() ? 0 : total / static_cast<Scalar>(gt_tracks.size());
      }

      std::map<FrameRegion, Scalar> scores;
      for (const auto& [f, r, c] : pred->region_scores) scores[{f, r}] = c;

      const int tiles = std::min(8, s.num_frames);
      std::vector<int> frames;
      for (int i = 0; i < tiles; ++i)
        frames.push_back(tiles == 1 ? 0 : i * (s.num_frames - 1) / (tiles - 1));

      const Image timeline =
          render_timeline(s.num_frames, gt_tracks, tubes_ok, tiles * s.width);
      Image mosaic(tiles * s.width, s.height + timeline.height + 2, 16, 16, 18);
      for (int i = 0; i < tiles; ++i) {
        Image tile = render_frame(s, frames[static_cast<std::size_t>(i)], tubes_ok,
                                  gt_tracks, scores);
        mosaic.blit(tile, i * s.width, 0);
      }
      mosaic.blit(timeline, 0, s.height + 2);

      std::ostringstream name;
      name << "case_" << s.video_id << "_" << e << ".png";
      write_png((fs::path(out_dir) / name.str()).string(), mosaic);

      std::string expr;
      for (const auto& tok : rc.expression) expr += tok + " ";
      html << "<div class=\"case\"><h3>" << s.video_id << " / expr " << e << " ("
           << to_string(rc.kind) << ")</h3>\n<p>\"" << html_escape(expr)
           << "\" &mdash; vIoU " << case_viou << ", tubes " << pred->tubes.size()
           << "</p>\n<img src=\"" << name.str() << "\">\n</div>\n";
    }
  }
  html << "</body></html>\n";

  std::ofstream out(fs::path(out_dir) / "index.html", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report index");
  const std::string body = html.str();
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

}  // namespace dstg
