#include "crnc/crn_text.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <sstream>
#include <vector>

#include "crnc/errors.hpp"

namespace crnc {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '.'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

class LineParser {
 public:
  LineParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char peek_after_space(std::size_t from) const {
    while (from < text_.size() && is_space(text_[from])) ++from;
    return from < text_.size() ? text_[from] : '\0';
  }

  // Species name with an optional trailing rail tag.
  // Inside a reaction side, "X+Y" reads as X plus Y; elsewhere '+' is always a tag.
  std::string name(bool in_sum = false) {
    skip_space();
    if (!is_name_start(peek())) fail("expected species name");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    if (peek() == '-') {
      ++pos_;
    } else if (peek() == '+') {
      const char next = peek_after_space(pos_ + 1);
      if (!in_sum || next == '\0' || next == '+') ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::vector<std::pair<std::string, std::int64_t>> side() {
    std::vector<std::pair<std::string, std::int64_t>> terms;
    if (at_end()) return terms;
    while (true) {
      skip_space();
      std::int64_t coeff = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        const std::size_t start = pos_;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, coeff);
        if (ec != std::errc() || coeff < 1) fail("bad stoichiometric coefficient");
      }
      terms.emplace_back(name(true), coeff);
      if (at_end()) break;
      if (peek() != '+') fail("expected '+' between terms");
      ++pos_;
    }
    return terms;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_, what + " in '" + std::string(text_) + "'");
  }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

double parse_rate(std::string_view text, std::size_t line) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !(v > 0.0)) {
    throw ParseError(line, "bad rate constant '" + std::string(text) + "'");
  }
  return v;
}

void parse_reaction(Crn& crn, std::string_view body, std::size_t line) {
  double rate = 1.0;
  body = trim(body);
  if (!body.empty() && body.back() == ']') {
    const auto open = body.rfind('[');
    if (open == std::string_view::npos) throw ParseError(line, "unbalanced ']'");
    std::string_view attr = trim(body.substr(open + 1, body.size() - open - 2));
    if (attr.substr(0, 2) != "k=") throw ParseError(line, "expected [k=...]");
    rate = parse_rate(attr.substr(2), line);
    body = trim(body.substr(0, open));
  }
  const auto arrow = body.find("->");
  if (arrow == std::string_view::npos) throw ParseError(line, "reaction without '->'");
  if (body.find("->", arrow + 2) != std::string_view::npos) throw ParseError(line, "more than one '->'");
  auto lhs = LineParser(body.substr(0, arrow), line).side();
  auto rhs = LineParser(body.substr(arrow + 2), line).side();
  if (lhs.empty()) throw ParseError(line, "reaction without reactants");
  auto to_terms = [&](const auto& side) {
    std::vector<Term> terms;
    for (const auto& [name, coeff] : side) terms.push_back(Term{crn.ensure_species(name), coeff});
    return terms;
  };
  auto reactants = to_terms(lhs);
  auto products = to_terms(rhs);
  crn.add_reaction(Reaction(std::move(reactants), std::move(products), rate));
}

}  // namespace

Crn parse_crn(std::string_view text) {
  Crn crn;
  std::set<SpeciesId> declared;
  std::set<SpeciesId> initialized;
  std::size_t constructs = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, "expected 'species:', 'init:' or 'reaction:'");
    const std::string_view keyword = trim(line.substr(0, colon));
    const std::string_view body = trim(line.substr(colon + 1));
    ++constructs;
    if (keyword == "reaction") {
      parse_reaction(crn, body, line_no);
    } else if (keyword == "species") {
      LineParser p(body, line_no);
      const std::string name = p.name();
      Role role = Role::kInternal;
      if (!p.at_end()) {
        const std::string_view rest = trim(body.substr(name.size()));
        if (rest.substr(0, 5) != "role=") p.fail("expected role=...");
        auto parsed = parse_role(trim(rest.substr(5)));
        if (!parsed) p.fail("unknown role");
        role = *parsed;
      }
      const SpeciesId s = crn.ensure_species(name);
      if (!declared.insert(s).second) throw ParseError(line_no, "species '" + name + "' declared twice");
      crn.set_role(s, role);
    } else if (keyword == "init") {
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'init: NAME = VALUE'");
      LineParser p(body.substr(0, eq), line_no);
      const std::string name = p.name();
      if (!p.at_end()) p.fail("trailing text after species name");
      Rational value;
      try {
        value = Rational::parse(body.substr(eq + 1));
      } catch (const ParseError& e) {
        throw ParseError(line_no, e.what());
      }
      if (value.sign() < 0) throw ParseError(line_no, "negative initial concentration for '" + name + "'");
      const SpeciesId s = crn.ensure_species(name);
      if (!initialized.insert(s).second) throw ParseError(line_no, "initial value for '" + name + "' given twice");
      crn.set_initial(s, value);
    } else {
      throw ParseError(line_no, "unknown construct '" + std::string(keyword) + "'");
    }
    if (end == text.size()) break;
  }
  if (constructs == 0) throw ParseError("empty CRN: no species, initial values or reactions");
  return crn;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_reaction(const Crn& crn, const Reaction& r) {
  std::ostringstream os;
  auto side = [&](const std::vector<Term>& terms) {
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (k) os << " + ";
      if (terms[k].coeff != 1) os << terms[k].coeff << ' ';
      os << crn.species(terms[k].species).name;
    }
  };
  side(r.reactants());
  os << " ->";
  if (!r.products().empty()) {
    os << ' ';
    side(r.products());
  }
  if (r.rate() != 1.0) os << " [k=" << format_double(r.rate()) << ']';
  return os.str();
}

std::string print_crn(const Crn& crn) {
  std::ostringstream os;
  for (const auto& s : crn.species()) {
    os << "species: " << s.name;
    if (s.role != Role::kInternal) os << " role=" << role_name(s.role);
    os << '\n';
  }
  for (SpeciesId s = 0; s < crn.species_count(); ++s) {
    if (!crn.initial()[s].is_zero()) os << "init: " << crn.species(s).name << " = " << crn.initial()[s] << '\n';
  }
  for (const auto& r : crn.reactions()) os << "reaction: " << format_reaction(crn, r) << '\n';
  return os.str();
}

}  // namespace crnc
