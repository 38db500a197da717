#include "pdf/filters.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstdlib>

#include "citeassist/error.hpp"

namespace citeassist::pdf {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::MalformedPdf, what); }

std::int64_t param_int(const Dict& params, std::string_view key, std::int64_t fallback) {
  if (const Object* o = params.find(key)) {
    if (auto v = o->as_int()) return *v;
  }
  return fallback;
}

std::string apply_predictor(std::string data, const Dict& params) {
  const auto predictor = param_int(params, "Predictor", 1);
  if (predictor <= 1) return data;
  const auto colors = param_int(params, "Colors", 1);
  const auto bpc = param_int(params, "BitsPerComponent", 8);
  const auto columns = param_int(params, "Columns", 1);
  if (colors < 1 || bpc < 1 || columns < 1 || colors * bpc * columns > (1 << 24)) fail("bad predictor parameters");
  const std::size_t bpp = static_cast<std::size_t>(std::max<std::int64_t>(1, (colors * bpc + 7) / 8));
  const std::size_t row_len = static_cast<std::size_t>((colors * bpc * columns + 7) / 8);

  if (predictor == 2) {
    if (bpc != 8) fail("TIFF predictor only supported for 8-bit components");
    for (std::size_t row = 0; row + row_len <= data.size(); row += row_len) {
      for (std::size_t i = bpp; i < row_len; ++i) {
        data[row + i] = static_cast<char>(static_cast<unsigned char>(data[row + i]) +
                                          static_cast<unsigned char>(data[row + i - bpp]));
      }
    }
    return data;
  }

  // PNG predictors: each row carries its own filter-type byte.
  std::string out;
  out.reserve(data.size());
  std::vector<unsigned char> prev(row_len, 0), cur(row_len, 0);
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto type = static_cast<unsigned char>(data[pos++]);
    const std::size_t n = std::min(row_len, data.size() - pos);
    std::fill(cur.begin(), cur.end(), 0);
    for (std::size_t i = 0; i < n; ++i) cur[i] = static_cast<unsigned char>(data[pos + i]);
    pos += n;
    for (std::size_t i = 0; i < row_len; ++i) {
      const unsigned left = i >= bpp ? cur[i - bpp] : 0;
      const unsigned up = prev[i];
      const unsigned up_left = i >= bpp ? prev[i - bpp] : 0;
      switch (type) {
        case 0: break;
        case 1: cur[i] = static_cast<unsigned char>(cur[i] + left); break;
        case 2: cur[i] = static_cast<unsigned char>(cur[i] + up); break;
        case 3: cur[i] = static_cast<unsigned char>(cur[i] + ((left + up) >> 1)); break;
        case 4: {
          const int p = static_cast<int>(left) + static_cast<int>(up) - static_cast<int>(up_left);
          const int pa = std::abs(p - static_cast<int>(left));
          const int pb = std::abs(p - static_cast<int>(up));
          const int pc = std::abs(p - static_cast<int>(up_left));
          const unsigned pred = (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : up_left);
          cur[i] = static_cast<unsigned char>(cur[i] + pred);
          break;
        }
        default:
          fail("bad PNG predictor row type");
      }
    }
    out.append(reinterpret_cast<const char*>(cur.data()), n);
    std::swap(prev, cur);
  }
  return out;
}

std::string ascii_hex_decode(std::string_view data) {
  std::string out;
  int pending = -1;
  for (char c : data) {
    if (c == '>') break;
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else continue;
    if (pending < 0) {
      pending = v;
    } else {
      out += static_cast<char>((pending << 4) | v);
      pending = -1;
    }
  }
  if (pending >= 0) out += static_cast<char>(pending << 4);
  return out;
}

std::string ascii85_decode(std::string_view data) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  std::size_t i = 0;
  if (data.substr(0, 2) == "<~") i = 2;
  for (; i < data.size(); ++i) {
    char c = data[i];
    if (c == '~') break;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') continue;
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int s = 24; s >= 0; s -= 8) out += static_cast<char>((tuple >> s) & 0xFF);
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k) out += static_cast<char>((tuple >> (24 - 8 * k)) & 0xFF);
  }
  return out;
}

std::string lzw_decode(std::string_view data, bool early_change) {
  std::string out;
  std::vector<std::string> table;
  auto reset = [&] {
    table.clear();
    for (int i = 0; i < 256; ++i) table.emplace_back(1, static_cast<char>(i));
    table.emplace_back();  // 256: clear
    table.emplace_back();  // 257: end
  };
  reset();
  int code_len = 9;
  std::uint32_t buffer = 0;
  int bits = 0;
  std::string prev;
  for (unsigned char byte : data) {
    buffer = (buffer << 8) | byte;
    bits += 8;
    while (bits >= code_len) {
      const int code = static_cast<int>((buffer >> (bits - code_len)) & ((1u << code_len) - 1));
      bits -= code_len;
      if (code == 256) {
        reset();
        code_len = 9;
        prev.clear();
        continue;
      }
      if (code == 257) return out;
      std::string entry;
      if (code < static_cast<int>(table.size())) {
        entry = table[static_cast<std::size_t>(code)];
      } else if (code == static_cast<int>(table.size()) && !prev.empty()) {
        entry = prev + prev[0];
      } else {
        fail("bad LZW code");
      }
      out += entry;
      if (!prev.empty()) table.push_back(prev + entry[0]);
      prev = entry;
      const std::size_t limit = early_change ? table.size() + 1 : table.size();
      if (limit >= 512 && code_len < 12 && limit >= (1u << code_len)) ++code_len;
    }
  }
  return out;
}

std::string run_length_decode(std::string_view data) {
  std::string out;
  std::size_t i = 0;
  while (i < data.size()) {
    const auto len = static_cast<unsigned char>(data[i++]);
    if (len == 128) break;
    if (len < 128) {
      const std::size_t n = std::min<std::size_t>(len + 1u, data.size() - i);
      out.append(data.substr(i, n));
      i += n;
    } else if (i < data.size()) {
      out.append(257u - len, data[i++]);
    }
  }
  return out;
}

}  // namespace

std::string flate_decode(std::string_view data) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) fail("zlib init failed");
  std::string out;
  char buf[16384];
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof buf - zs.avail_out);
  } while (rc == Z_OK && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  // Truncated streams still yield their decodable prefix, as viewers do.
  if (rc != Z_STREAM_END && rc != Z_OK && rc != Z_BUF_ERROR && out.empty()) fail("corrupt Flate stream");
  return out;
}

std::string flate_encode(std::string_view data) {
  uLongf len = compressBound(static_cast<uLong>(data.size()));
  std::string out(len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &len, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uLong>(data.size()), Z_BEST_COMPRESSION) != Z_OK) {
    throw Error(ErrorCode::RenderFailure, "zlib compression failed");
  }
  out.resize(len);
  return out;
}

std::string apply_filters(std::string data, const std::vector<FilterStage>& stages) {
  for (const auto& stage : stages) {
    const std::string& n = stage.name;
    if (n == "FlateDecode" || n == "Fl") {
      data = apply_predictor(flate_decode(data), stage.params);
    } else if (n == "LZWDecode" || n == "LZW") {
      data = apply_predictor(lzw_decode(data, param_int(stage.params, "EarlyChange", 1) != 0), stage.params);
    } else if (n == "ASCIIHexDecode" || n == "AHx") {
      data = ascii_hex_decode(data);
    } else if (n == "ASCII85Decode" || n == "A85") {
      data = ascii85_decode(data);
    } else if (n == "RunLengthDecode" || n == "RL") {
      data = run_length_decode(data);
    } else if (n == "Crypt") {
      // Identity crypt filter; real decryption is never attempted.
    } else {
      fail("unsupported filter " + n);
    }
  }
  return data;
}

}  // namespace citeassist::pdf
