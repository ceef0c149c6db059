//
// Copyright 2026 The dpfed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpfed/feature_io.h"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

#include "absl/strings/str_cat.h"

namespace dpfed {
namespace {

constexpr std::string_view kMagic = "DPFS1";

absl::Status ParseError(size_t offset, std::string_view what) {
  return absl::InvalidArgumentError(
      absl::StrCat("byte ", offset, ": ", std::string(what)));
}

// Reads comma/newline separated tokens while tracking the byte offset.
class CsvCursor {
 public:
  explicit CsvCursor(std::string_view text) : text_(text) {}

  size_t offset() const { return pos_; }
  bool AtEnd() const { return pos_ >= text_.size(); }

  // Next field up to ',' or end of line. Sets *end_of_line when the field
  // closed a line.
  std::string_view NextField(bool* end_of_line) {
    const size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '\n' &&
           text_[pos_] != '\r') {
      ++pos_;
    }
    std::string_view field = text_.substr(start, pos_ - start);
    *end_of_line = true;
    if (pos_ < text_.size() && text_[pos_] == ',') {
      *end_of_line = false;
      ++pos_;
    } else {
      if (pos_ < text_.size() && text_[pos_] == '\r') ++pos_;
      if (pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
    }
    return field;
  }

 private:
  std::string_view text_;
  size_t pos_ = 0;
};

template <typename T>
bool ParseNumber(std::string_view field, T* out) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  if (field.empty()) return false;
  const auto result =
      std::from_chars(field.data(), field.data() + field.size(), *out);
  return result.ec == std::errc() && result.ptr == field.data() + field.size();
}

absl::Status ValidateContents(const LabeledData& data) {
  for (int64_t r = 0; r < data.features.rows(); ++r) {
    for (int64_t c = 0; c < data.features.cols(); ++c) {
      if (!std::isfinite(data.features(r, c))) {
        return absl::InvalidArgumentError(
            absl::StrCat("non-finite value at row ", r, ", column ", c));
      }
    }
  }
  for (size_t r = 0; r < data.labels.size(); ++r) {
    if (data.labels[r] < 0 || data.labels[r] >= data.num_classes) {
      return absl::InvalidArgumentError(
          absl::StrCat("label ", data.labels[r], " at row ", r,
                       " out of range [0, ", data.num_classes, ")"));
    }
  }
  return absl::OkStatus();
}

void AppendLittleEndian(std::string* out, uint64_t value, int bytes) {
  for (int b = 0; b < bytes; ++b) {
    out->push_back(static_cast<char>((value >> (8 * b)) & 0xff));
  }
}

bool ReadLittleEndian(std::string_view in, size_t* pos, int bytes,
                      uint64_t* value) {
  if (*pos + static_cast<size_t>(bytes) > in.size()) return false;
  *value = 0;
  for (int b = 0; b < bytes; ++b) {
    *value |= static_cast<uint64_t>(static_cast<unsigned char>(in[*pos + b]))
              << (8 * b);
  }
  *pos += static_cast<size_t>(bytes);
  return true;
}

}  // namespace

absl::StatusOr<LabeledData> ParseFeatureCsv(const std::string& contents) {
  if (contents.empty()) return ParseError(0, "empty file, expected header");
  CsvCursor cursor(contents);
  bool eol = false;
  int64_t rows = 0;
  int64_t cols = 0;
  int num_classes = 0;

  size_t at = cursor.offset();
  if (!ParseNumber(cursor.NextField(&eol), &rows) || eol || rows < 0) {
    return ParseError(at, "malformed header, expected <rows>,<cols>");
  }
  at = cursor.offset();
  if (!ParseNumber(cursor.NextField(&eol), &cols) || !eol || cols < 1) {
    return ParseError(at, "malformed header, expected <cols> >= 1");
  }
  at = cursor.offset();
  if (!ParseNumber(cursor.NextField(&eol), &num_classes) || !eol ||
      num_classes < 1) {
    return ParseError(at, "malformed header, expected <num_classes> >= 1");
  }

  LabeledData data;
  data.num_classes = num_classes;
  data.features.resize(rows, cols);
  data.labels.resize(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c <= cols; ++c) {
      at = cursor.offset();
      if (cursor.AtEnd()) {
        return ParseError(at,
                          absl::StrCat("unexpected end of file in row ", r));
      }
      std::string_view field = cursor.NextField(&eol);
      const bool last = c == cols;
      if (eol != last) {
        return ParseError(
            at, absl::StrCat("row ", r, " must have ", cols + 1, " fields"));
      }
      if (last) {
        int label = 0;
        if (!ParseNumber(field, &label)) {
          return ParseError(at, "malformed label");
        }
        if (label < 0 || label >= num_classes) {
          return ParseError(at,
                            absl::StrCat("label ", label, " out of range [0, ",
                                         num_classes, ")"));
        }
        data.labels[static_cast<size_t>(r)] = label;
      } else {
        double value = 0.0;
        if (!ParseNumber(field, &value)) {
          return ParseError(at, "malformed value");
        }
        if (!std::isfinite(value)) {
          return ParseError(at, "non-finite value");
        }
        data.features(r, c) = value;
      }
    }
  }
  while (!cursor.AtEnd()) {
    at = cursor.offset();
    if (!cursor.NextField(&eol).empty()) {
      return ParseError(at, "more rows than declared in the header");
    }
  }
  return data;
}

absl::StatusOr<LabeledData> ParseFeatureBinary(const std::string& contents) {
  if (contents.size() < kMagic.size() ||
      std::string_view(contents).substr(0, kMagic.size()) != kMagic) {
    return ParseError(0, "missing DPFS1 magic");
  }
  size_t pos = kMagic.size();
  uint64_t rows = 0;
  uint64_t cols = 0;
  uint64_t classes = 0;
  if (!ReadLittleEndian(contents, &pos, 8, &rows) ||
      !ReadLittleEndian(contents, &pos, 8, &cols) ||
      !ReadLittleEndian(contents, &pos, 4, &classes)) {
    return ParseError(pos, "truncated header");
  }
  if (cols < 1 || classes < 1) {
    return ParseError(kMagic.size(), "header needs cols >= 1, classes >= 1");
  }
  const size_t need = rows * cols * 8 + rows * 4;
  if (contents.size() - pos != need) {
    return ParseError(pos, absl::StrCat("payload has ", contents.size() - pos,
                                        " bytes, header implies ", need));
  }
  LabeledData data;
  data.num_classes = static_cast<int>(classes);
  data.features.resize(static_cast<int64_t>(rows), static_cast<int64_t>(cols));
  data.labels.resize(rows);
  for (uint64_t r = 0; r < rows; ++r) {
    for (uint64_t c = 0; c < cols; ++c) {
      uint64_t bits = 0;
      const size_t at = pos;
      ReadLittleEndian(contents, &pos, 8, &bits);
      double value = 0.0;
      std::memcpy(&value, &bits, sizeof(value));
      if (!std::isfinite(value)) return ParseError(at, "non-finite value");
      data.features(static_cast<int64_t>(r), static_cast<int64_t>(c)) = value;
    }
  }
  for (uint64_t r = 0; r < rows; ++r) {
    uint64_t bits = 0;
    const size_t at = pos;
    ReadLittleEndian(contents, &pos, 4, &bits);
    const auto label = static_cast<int32_t>(static_cast<uint32_t>(bits));
    if (label < 0 || label >= data.num_classes) {
      return ParseError(at, absl::StrCat("label ", label, " out of range"));
    }
    data.labels[r] = label;
  }
  return data;
}

std::string FormatFeatureCsv(const LabeledData& data) {
  std::string out =
      absl::StrCat(data.features.rows(), ",", data.features.cols(), "\n",
                   data.num_classes, "\n");
  char buffer[64];
  for (int64_t r = 0; r < data.features.rows(); ++r) {
    for (int64_t c = 0; c < data.features.cols(); ++c) {
      // Shortest representation that round-trips exactly.
      const auto result =
          std::to_chars(buffer, buffer + sizeof(buffer), data.features(r, c));
      out.append(buffer, result.ptr);
      out.push_back(',');
    }
    absl::StrAppend(&out, data.labels[static_cast<size_t>(r)], "\n");
  }
  return out;
}

std::string FormatFeatureBinary(const LabeledData& data) {
  std::string out(kMagic);
  AppendLittleEndian(&out, static_cast<uint64_t>(data.features.rows()), 8);
  AppendLittleEndian(&out, static_cast<uint64_t>(data.features.cols()), 8);
  AppendLittleEndian(&out, static_cast<uint64_t>(data.num_classes), 4);
  for (int64_t r = 0; r < data.features.rows(); ++r) {
    for (int64_t c = 0; c < data.features.cols(); ++c) {
      uint64_t bits = 0;
      const double value = data.features(r, c);
      std::memcpy(&bits, &value, sizeof(bits));
      AppendLittleEndian(&out, bits, 8);
    }
  }
  for (int label : data.labels) {
    AppendLittleEndian(&out, static_cast<uint32_t>(label), 4);
  }
  return out;
}

absl::StatusOr<LabeledData> LoadFeatureMatrix(const std::string& path,
                                              FeatureFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string contents = buffer.str();
  if (format == FeatureFormat::kAuto) {
    format = contents.compare(0, kMagic.size(), kMagic) == 0
                 ? FeatureFormat::kBinary
                 : FeatureFormat::kCsv;
  }
  return format == FeatureFormat::kBinary ? ParseFeatureBinary(contents)
                                          : ParseFeatureCsv(contents);
}

absl::Status WriteFeatureMatrix(const std::string& path,
                                const LabeledData& data, FeatureFormat format) {
  if (absl::Status s = ValidateContents(data); !s.ok()) return s;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  out << (format == FeatureFormat::kBinary ? FormatFeatureBinary(data)
                                           : FormatFeatureCsv(data));
  return out ? absl::OkStatus()
             : absl::DataLossError(absl::StrCat("short write to ", path));
}

}  // namespace dpfed
