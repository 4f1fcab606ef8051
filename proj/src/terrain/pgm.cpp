#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "common/error.hpp"
#include "terrain/terrain.hpp"

namespace wtt::terrain {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_int(const std::string& tok, const std::string& path, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Io, path + ": bad PGM " + what + " '" + tok + "'");
  }
}

}  // namespace

DepthFrame read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, path + ": cannot open");
  if (header_token(in) != "P5") throw Error(ErrorKind::Io, path + ": not a binary PGM (P5)");
  DepthFrame f;
  f.width = parse_int(header_token(in), path, "width");
  f.height = parse_int(header_token(in), path, "height");
  const int maxval = parse_int(header_token(in), path, "maxval");
  if (f.width <= 0 || f.height <= 0) throw Error(ErrorKind::Io, path + ": non-positive dimensions");
  if (maxval < 256 || maxval > 65535) throw Error(ErrorKind::Io, path + ": expected 16-bit maxval");
  const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
  std::vector<unsigned char> raw(2 * n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw Error(ErrorKind::Io, path + ": truncated sample data (header declares " + std::to_string(f.width) + "x" +
                                   std::to_string(f.height) + ")");
  f.values.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    f.values[k] = static_cast<std::uint16_t>((raw[2 * k] << 8) | raw[2 * k + 1]);
  return f;
}

void write_pgm16(const std::string& path, const DepthFrame& frame) {
  frame.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, path + ": cannot open for writing");
  out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
  std::vector<unsigned char> raw(2 * frame.values.size());
  for (std::size_t k = 0; k < frame.values.size(); ++k) {
    raw[2 * k] = static_cast<unsigned char>(frame.values[k] >> 8);
    raw[2 * k + 1] = static_cast<unsigned char>(frame.values[k] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorKind::Io, path + ": write failed");
}

std::vector<std::string> list_depth_sequence(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::Io, dir + ": not a directory");
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::Io, dir + ": no .pgm frames");
  return files;
}

}  // namespace wtt::terrain
