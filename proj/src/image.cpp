#include "wosno/image.hpp"

#include "wosno/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wosno {

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw Error("image: negative size");
  pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

namespace {

// Next header token, skipping whitespace and comments.
std::string header_token(std::istream& in, const std::string& path) {
  std::string tok;
  while (tok.empty()) {
    const int c = in.get();
    if (c == EOF) throw Error(path + ": truncated PGM header");
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      while (in.peek() != EOF && !std::isspace(in.peek()) && in.peek() != '#')
        tok.push_back(static_cast<char>(in.get()));
    }
  }
  return tok;
}

int header_int(std::istream& in, const std::string& path, const char* what) {
  const std::string tok = header_token(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(path + ": bad PGM " + what + " '" + tok + "'");
  }
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  const std::string magic = header_token(in, path);
  if (magic != "P2" && magic != "P5") throw Error(path + ": not a P2/P5 PGM");
  const int w = header_int(in, path, "width");
  const int h = header_int(in, path, "height");
  const int maxval = header_int(in, path, "maxval");
  if (w <= 0 || h <= 0) throw Error(path + ": bad PGM size");
  if (maxval < 1 || maxval > 65535) throw Error(path + ": bad PGM maxval");

  GrayImage img(w, h);
  const double scale = 1.0 / maxval;
  if (magic == "P2") {
    for (auto& p : img.pixels) {
      int v = 0;
      if (!(in >> v)) throw Error(path + ": truncated PGM data");
      if (v < 0 || v > maxval) throw Error(path + ": PGM value out of range");
      p = v * scale;
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(img.pixels.size() * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw Error(path + ": truncated PGM data");
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
      if (v > maxval) throw Error(path + ": PGM value out of range");
      img.pixels[i] = v * scale;
    }
  }
  return img;
}

void write_pgm(const std::string& path, const GrayImage& img, const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "P5\n";
  if (!comment.empty()) out << (comment.front() == '#' ? "" : "# ") << comment << '\n';
  out << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error("failed writing " + path);
}

Mask mask_from_image(const GrayImage& img) {
  Mask m{img.width, img.height, std::vector<std::uint8_t>(img.pixels.size())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) m.masked[i] = img.pixels[i] > 0.5 ? 1 : 0;
  return m;
}

}  // namespace wosno
