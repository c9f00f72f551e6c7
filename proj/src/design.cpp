#include "voxbench/design.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace voxbench {

MaterialMatrix MaterialMatrix::from_codes(const std::array<int, kCellCount>& codes) {
  MaterialMatrix m;
  for (int i = 0; i < kCellCount; ++i) {
    if (codes[i] < 0 || codes[i] >= kMaterialCount) {
      throw InvalidDesign("material code " + std::to_string(codes[i]) + " outside 0..4");
    }
    m.cells_[i] = static_cast<Material>(codes[i]);
  }
  return m;
}

MaterialMatrix MaterialMatrix::filled(Material material) {
  MaterialMatrix m;
  m.cells_.fill(material);
  return m;
}

std::array<std::uint8_t, kCellCount> MaterialMatrix::to_bytes() const {
  std::array<std::uint8_t, kCellCount> out{};
  for (int i = 0; i < kCellCount; ++i) out[i] = static_cast<std::uint8_t>(cells_[i]);
  return out;
}

MaterialMatrix MaterialMatrix::mirrored() const {
  MaterialMatrix m;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) m.set(r, kGridSize - 1 - c, at(r, c));
  }
  return m;
}

ValidityReport validate(const MaterialMatrix& matrix) {
  ValidityReport report;
  int filled = 0;
  int start = -1;
  for (int i = 0; i < kCellCount; ++i) {
    const Material m = matrix.cells()[i];
    if (m == Material::Empty) continue;
    ++filled;
    if (start < 0) start = i;
    if (is_actuator(m)) report.has_actuator = true;
  }
  report.nonempty = filled > 0;
  if (!report.nonempty) {
    // Vacuously connected; still invalid.
    report.connected = true;
    return report;
  }

  std::array<bool, kCellCount> seen{};
  std::array<int, kCellCount> stack{};
  int top = 0;
  int reached = 0;
  stack[top++] = start;
  seen[start] = true;
  while (top > 0) {
    const int cell = stack[--top];
    ++reached;
    const int r = cell / kGridSize;
    const int c = cell % kGridSize;
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int nr = r + dr[k];
      const int nc = c + dc[k];
      if (nr < 0 || nr >= kGridSize || nc < 0 || nc >= kGridSize) continue;
      const int n = nr * kGridSize + nc;
      if (seen[n] || matrix.cells()[n] == Material::Empty) continue;
      seen[n] = true;
      stack[top++] = n;
    }
  }
  report.connected = reached == filled;
  report.valid = report.connected && report.nonempty && report.has_actuator;
  return report;
}

RobotDesign::RobotDesign(const MaterialMatrix& matrix) : matrix_(matrix) {
  const ValidityReport report = validate(matrix);
  if (!report.nonempty) throw InvalidDesign("design has no voxels");
  if (!report.connected) throw InvalidDesign("design voxels are not 4-connected");
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const Material m = matrix.at(r, c);
      if (m == Material::HorizontalActuator) {
        actuators_.push_back({r, c, ActuatorAxis::Horizontal});
      } else if (m == Material::VerticalActuator) {
        actuators_.push_back({r, c, ActuatorAxis::Vertical});
      }
    }
  }
}

RobotDesign random_design(Rng& rng, int retry_cap) {
  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    MaterialMatrix m;
    for (auto& cell : m.cells()) cell = static_cast<Material>(rng.below(kMaterialCount));
    if (validate(m).valid) return RobotDesign(m);
  }
  throw SamplingFailure("random_design: no valid design after " + std::to_string(retry_cap) +
                        " draws");
}

RobotDesign mutate(const RobotDesign& design, double rate, Rng& rng, int retry_cap) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError("mutation rate must lie in [0, 1]");
  }
  if (rate == 0.0) return design;
  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    MaterialMatrix m = design.matrix();
    for (auto& cell : m.cells()) {
      if (rng.bernoulli(rate)) cell = static_cast<Material>(rng.below(kMaterialCount));
    }
    if (validate(m).valid) return RobotDesign(m);
  }
  throw MutationFailure("mutate: no valid offspring after " + std::to_string(retry_cap) +
                        " attempts");
}

int actuator_count(const MaterialMatrix& matrix) {
  return static_cast<int>(std::count_if(matrix.cells().begin(), matrix.cells().end(),
                                        [](Material m) { return is_actuator(m); }));
}

int voxel_count(const MaterialMatrix& matrix) {
  return static_cast<int>(std::count_if(matrix.cells().begin(), matrix.cells().end(),
                                        [](Material m) { return m != Material::Empty; }));
}

std::uint64_t design_hash(const MaterialMatrix& matrix) {
  const auto bytes = matrix.to_bytes();
  return fnv1a64(std::span<const std::uint8_t>(bytes));
}

std::string render_matrix(const MaterialMatrix& matrix) {
  std::string out;
  out.reserve(kGridSize * kGridSize * 2);
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      out.push_back(static_cast<char>('0' + matrix.code(r, c)));
      out.push_back(c + 1 < kGridSize ? ' ' : '\n');
    }
  }
  return out;
}

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::NoMatrixFound: return "NoMatrixFound";
    case ParseErrorKind::BadDimensions: return "BadDimensions";
    case ParseErrorKind::BadCode: return "BadCode";
  }
  return "?";
}

namespace {

struct Token {
  long value;
  TextSpan span;
};

using Rows = std::vector<std::vector<Token>>;

// Outcome of inspecting one candidate region of the text.
struct Candidate {
  std::size_t pos = 0;
  std::optional<MaterialMatrix> matrix;
  std::optional<ParseError> error;
};

Candidate judge(std::size_t pos, TextSpan whole, const Rows& rows) {
  Candidate cand;
  cand.pos = pos;
  const bool square = rows.size() == kGridSize &&
                      std::all_of(rows.begin(), rows.end(),
                                  [](const auto& row) { return row.size() == kGridSize; });
  if (!square) {
    std::ostringstream msg;
    msg << "expected 5x5 grid, found " << rows.size() << " row(s)";
    cand.error.emplace(ParseErrorKind::BadDimensions, whole, msg.str());
    return cand;
  }
  MaterialMatrix m;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const Token& t = rows[r][c];
      if (t.value < 0 || t.value >= kMaterialCount) {
        cand.error.emplace(ParseErrorKind::BadCode, t.span,
                           "material code " + std::to_string(t.value) + " outside 0..4");
        return cand;
      }
      m.set(r, c, static_cast<Material>(t.value));
    }
  }
  cand.matrix = m;
  return cand;
}

bool is_sep(char ch) { return ch == ' ' || ch == '\t' || ch == ',' || ch == '\r'; }
bool is_digit(char ch) { return std::isdigit(static_cast<unsigned char>(ch)) != 0; }

// Parses `[[1,2],[3,4]]` style nesting starting at `pos`. Returns the end
// offset on success; nullopt when the text there is not a nested integer array.
std::optional<std::size_t> parse_nested(std::string_view text, std::size_t pos, Rows& rows) {
  auto skip_ws = [&](std::size_t i) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    return i;
  };
  std::size_t i = pos;
  if (i >= text.size() || text[i] != '[') return std::nullopt;
  i = skip_ws(i + 1);
  if (i >= text.size() || text[i] != '[') return std::nullopt;
  while (true) {
    if (i >= text.size() || text[i] != '[') return std::nullopt;
    i = skip_ws(i + 1);
    std::vector<Token> row;
    while (i < text.size() && text[i] != ']') {
      const std::size_t start = i;
      if (text[i] == '-') ++i;
      if (i >= text.size() || !is_digit(text[i])) return std::nullopt;
      while (i < text.size() && is_digit(text[i])) ++i;
      const std::string digits(text.substr(start, i - start));
      row.push_back({std::stol(digits), {start, i}});
      i = skip_ws(i);
      if (i < text.size() && text[i] == ',') i = skip_ws(i + 1);
    }
    if (i >= text.size()) return std::nullopt;
    ++i;  // row ']'
    rows.push_back(std::move(row));
    i = skip_ws(i);
    if (i < text.size() && text[i] == ',') i = skip_ws(i + 1);
    if (i < text.size() && text[i] == ']') return i + 1;
  }
}

void bracket_candidates(std::string_view text, std::vector<Candidate>& out) {
  std::size_t i = 0;
  while ((i = text.find('[', i)) != std::string_view::npos) {
    Rows rows;
    if (auto end = parse_nested(text, i, rows)) {
      out.push_back(judge(i, {i, *end}, rows));
      i = *end;
    } else {
      ++i;
    }
  }
}

// Tokenizes one line that holds only digits and separators; nullopt otherwise.
std::optional<std::vector<Token>> digit_row(std::string_view text, std::size_t begin,
                                            std::size_t end) {
  std::vector<Token> tokens;
  std::size_t i = begin;
  while (i < end) {
    if (is_sep(text[i])) {
      ++i;
      continue;
    }
    if (!is_digit(text[i])) return std::nullopt;
    const std::size_t start = i;
    while (i < end && is_digit(text[i])) ++i;
    const std::string digits(text.substr(start, i - start));
    tokens.push_back({std::stol(digits.substr(0, 9)), {start, i}});
  }
  if (tokens.size() == 1 && tokens[0].span.end - tokens[0].span.begin > 1) {
    // Compact row such as "33333".
    const TextSpan s = tokens[0].span;
    tokens.clear();
    for (std::size_t k = s.begin; k < s.end; ++k) {
      tokens.push_back({static_cast<long>(text[k] - '0'), {k, k + 1}});
    }
  }
  if (tokens.empty()) return std::nullopt;
  return tokens;
}

void line_candidates(std::string_view text, std::vector<Candidate>& out) {
  Rows run;
  std::size_t run_begin = 0;
  std::size_t run_end = 0;
  auto flush = [&] {
    const bool meaningful = run.size() >= 2 || (run.size() == 1 && run[0].size() >= 2);
    if (meaningful) out.push_back(judge(run_begin, {run_begin, run_end}, run));
    run.clear();
  };
  std::size_t line_begin = 0;
  while (line_begin <= text.size()) {
    std::size_t line_end = text.find('\n', line_begin);
    if (line_end == std::string_view::npos) line_end = text.size();
    if (auto row = digit_row(text, line_begin, line_end)) {
      if (run.empty()) run_begin = row->front().span.begin;
      run_end = row->back().span.end;
      run.push_back(std::move(*row));
    } else {
      flush();
    }
    if (line_end == text.size()) break;
    line_begin = line_end + 1;
  }
  flush();
}

}  // namespace

MaterialMatrix parse_matrix(std::string_view text) {
  std::vector<Candidate> candidates;
  bracket_candidates(text, candidates);
  line_candidates(text, candidates);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.pos < b.pos; });
  for (const Candidate& c : candidates) {
    if (c.matrix) return *c.matrix;
  }
  for (const Candidate& c : candidates) {
    if (c.error) throw *c.error;
  }
  throw ParseError(ParseErrorKind::NoMatrixFound, {0, text.size()}, "no 5x5 matrix in text");
}

}  // namespace voxbench
