#pragma once

#include <string>
#include <vector>

#include "dstg/grounding.hpp"
#include "dstg/manifest.hpp"
#include "dstg/synthdata.hpp"

namespace dstg {

// Minimal RGB raster with the drawing ops the report needs.
struct Image {
  int width = 0, height = 0;
  std::vector<unsigned char> rgb;

  Image(int w, int h, unsigned char r = 0, unsigned char g = 0, unsigned char b = 0);
  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b);
  void fill_rect(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g,
                 unsigned char b);
  void outline_rect(int x0, int y0, int x1, int y1, int thickness, unsigned char r,
                    unsigned char g, unsigned char b);
  // 3x5 bitmap glyphs for digits and '.'; enough for score overlays.
  void draw_number(int x, int y, Scalar value, unsigned char r, unsigned char g,
                   unsigned char b);
  void blit(const Image& src, int x, int y);
};

// 8-bit RGB PNG (deflate via zlib); deterministic bytes for fixed input.
void write_png(const std::string& path, const Image& img);

// FNV hash of the encoded PNG, used by the regeneration test.
std::string png_content_hash(const Image& img);

// Static per-case overlays: sampled frames with GT boxes in green and
// predicted tubes in blue (red when the matched vIoU is below 0.3), a
// segment timeline, and one HTML index for the whole run.
void emit_report(const std::string& out_dir,
                 const std::vector<GroundingResult>& predictions,
                 const std::vector<VideoSample>& samples,
                 const RunManifest& manifest);

// Rendering pieces of emit_report, public so tests can inspect rasters.
Image render_frame(const VideoSample& s, int frame,
                   const std::vector<std::pair<const Tube*, bool>>& tubes_ok,
                   const std::vector<BoxTrack>& gt_tracks,
                   const std::map<FrameRegion, Scalar>& scores);
Image render_timeline(int num_frames, const std::vector<BoxTrack>& gt_tracks,
                      const std::vector<std::pair<const Tube*, bool>>& tubes_ok,
                      int width);

}  // namespace dstg
