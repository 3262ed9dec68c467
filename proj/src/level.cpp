#include "levelrepair/level.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "levelrepair/error.hpp"

namespace levelrepair {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RaggedLines: return "RaggedLines";
    case ErrorCode::UnknownCharacter: return "UnknownCharacter";
    case ErrorCode::MissingOrDuplicateStartGoal: return "MissingOrDuplicateStartGoal";
    case ErrorCode::AmbiguousCell: return "AmbiguousCell";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownDomain: return "UnknownDomain";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::EmptyConjunction: return "EmptyConjunction";
    case ErrorCode::EmptyDisjunction: return "EmptyDisjunction";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::BadBounds: return "BadBounds";
    case ErrorCode::MalformedProgram: return "MalformedProgram";
    case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::QuotaUnreachable: return "QuotaUnreachable";
    case ErrorCode::RepairTimeout: return "RepairTimeout";
    case ErrorCode::InfeasibleRepair: return "InfeasibleRepair";
    case ErrorCode::NoCompletedRows: return "NoCompletedRows";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

char to_char(TileKind kind) {
  switch (kind) {
    case TileKind::Empty: return '-';
    case TileKind::Solid: return 'X';
    case TileKind::Start: return '{';
    case TileKind::Goal: return '}';
  }
  return '?';
}

TileKind tile_from_char(char ch) {
  switch (ch) {
    case '-': return TileKind::Empty;
    case 'X': return TileKind::Solid;
    case '{': return TileKind::Start;
    case '}': return TileKind::Goal;
    default: break;
  }
  throw Error(ErrorCode::UnknownCharacter, std::string("character '") + ch + "' is not a tile");
}

std::string_view to_string(TileKind kind) {
  switch (kind) {
    case TileKind::Empty: return "Empty";
    case TileKind::Solid: return "Solid";
    case TileKind::Start: return "Start";
    case TileKind::Goal: return "Goal";
  }
  return "?";
}

Level::Level(int rows, int cols, std::vector<TileKind> cells, std::string domain)
    : rows_(rows), cols_(cols), cells_(std::move(cells)), domain_(std::move(domain)) {
  if (rows < 1 || cols < 1 || rows * cols < 2)
    throw Error(ErrorCode::InvalidArgument, "level needs at least two cells");
  if (cells_.size() != static_cast<std::size_t>(rows) * cols)
    throw Error(ErrorCode::DimensionMismatch, "cell count does not match rows x cols");
  int starts = 0;
  int goals = 0;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i] == TileKind::Start) {
      ++starts;
      start_ = cell_at(i);
    } else if (cells_[i] == TileKind::Goal) {
      ++goals;
      goal_ = cell_at(i);
    }
  }
  if (starts != 1 || goals != 1)
    throw Error(ErrorCode::MissingOrDuplicateStartGoal,
                "found " + std::to_string(starts) + " start and " + std::to_string(goals) + " goal cells");
}

Level Level::with_tile(Cell c, TileKind kind) const {
  auto cells = cells_;
  cells[index(c)] = kind;
  return Level(rows_, cols_, std::move(cells), domain_);
}

Level Level::with_domain(std::string domain) const { return Level(rows_, cols_, cells_, std::move(domain)); }

Level parse_level(std::string_view text, std::string domain) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::InvalidArgument, "empty level text");

  const auto cols = lines.front().size();
  std::vector<TileKind> cells;
  cells.reserve(lines.size() * cols);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].size() != cols)
      throw Error(ErrorCode::RaggedLines, "line " + std::to_string(r) + " has length " +
                                              std::to_string(lines[r].size()) + ", expected " +
                                              std::to_string(cols));
    for (char ch : lines[r]) cells.push_back(tile_from_char(ch));
  }
  return Level(static_cast<int>(lines.size()), static_cast<int>(cols), std::move(cells), std::move(domain));
}

std::string serialize_level(const Level& level) {
  std::string out;
  out.reserve(level.size() + level.rows());
  for (int r = 0; r < level.rows(); ++r) {
    for (int c = 0; c < level.cols(); ++c) out.push_back(to_char(level.at(r, c)));
    out.push_back('\n');
  }
  return out;
}

Level load_level(const std::string& path, std::string domain) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_level(buf.str(), std::move(domain));
}

void save_level(const Level& level, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << serialize_level(level);
}

OneHotTensor to_onehot(const Level& level) {
  OneHotTensor t(level.rows(), level.cols());
  for (int r = 0; r < level.rows(); ++r)
    for (int c = 0; c < level.cols(); ++c) t.at(r, c, static_cast<int>(level.at(r, c))) = 1.0;
  return t;
}

OneHotTensor zeros_like(const Level& level) { return OneHotTensor(level.rows(), level.cols()); }

Level from_onehot(const OneHotTensor& tensor, std::string domain) {
  if (tensor.values.size() != static_cast<std::size_t>(tensor.rows) * tensor.cols * kNumChannels)
    throw Error(ErrorCode::DimensionMismatch, "tensor size does not match its dimensions");
  std::vector<TileKind> cells;
  cells.reserve(static_cast<std::size_t>(tensor.rows) * tensor.cols);
  for (int r = 0; r < tensor.rows; ++r) {
    for (int c = 0; c < tensor.cols; ++c) {
      int best = 0;
      bool tied = false;
      for (int ch = 1; ch < kNumChannels; ++ch) {
        if (tensor.at(r, c, ch) > tensor.at(r, c, best)) {
          best = ch;
          tied = false;
        } else if (tensor.at(r, c, ch) == tensor.at(r, c, best)) {
          tied = true;
        }
      }
      if (tied)
        throw Error(ErrorCode::AmbiguousCell,
                    "cell (" + std::to_string(r) + "," + std::to_string(c) + ") has tied channels");
      cells.push_back(static_cast<TileKind>(best));
    }
  }
  return Level(tensor.rows, tensor.cols, std::move(cells), std::move(domain));
}

std::vector<CellChange> diff_cells(const Level& a, const Level& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::DimensionMismatch, "levels differ in shape");
  std::vector<CellChange> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.cells()[i] != b.cells()[i]) out.push_back({a.cell_at(i), a.cells()[i], b.cells()[i]});
  return out;
}

}  // namespace levelrepair
