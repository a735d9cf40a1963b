#include "bimcore/step.hpp"

#include "bimcore/errors.hpp"

#include <cctype>
#include <cstring>
#include <optional>
#include <variant>

namespace bimcore {

namespace {

bool is_keyword_char(std::uint8_t c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

/// One parameter value of a header entity. Only the shapes needed for the
/// three header entities are distinguished; everything else is Other.
struct StepValue {
    enum class Kind { Null, Star, String, Number, EnumOrRef, List, Other };
    Kind kind = Kind::Other;
    std::string text;             // decoded string payload
    std::vector<StepValue> items; // list payload

    const std::string* as_string() const { return kind == Kind::String ? &text : nullptr; }
};

struct HeaderEntity {
    std::string name;
    std::uint64_t offset = 0; // of the entity keyword
    std::vector<StepValue> params;
};

/// Structural header parse result; FILE_SCHEMA presence is checked by callers.
struct ParsedHeader {
    std::vector<HeaderEntity> entities;
    std::uint64_t end = 0;        // offset just past the header's `ENDSEC;`
    std::uint64_t endsec_at = 0;  // offset of the header's ENDSEC keyword

    const HeaderEntity* find(const char* name) const {
        for (const auto& e : entities)
            if (e.name == name) return &e;
        return nullptr;
    }
};

class Scanner {
public:
    explicit Scanner(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint64_t pos() const { return pos_; }
    void seek(std::uint64_t p) { pos_ = p; }
    bool eof() const { return pos_ >= data_.size(); }
    std::uint64_t size() const { return data_.size(); }

    std::uint8_t peek() const { return data_[pos_]; }

    /// Skips whitespace and /* */ comments.
    void skip_trivia() {
        while (pos_ < data_.size()) {
            const std::uint8_t c = data_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos_;
                continue;
            }
            if (c == '/' && pos_ + 1 < data_.size() && data_[pos_ + 1] == '*') {
                const std::uint64_t start = pos_;
                pos_ += 2;
                while (true) {
                    if (pos_ + 1 >= data_.size()) throw ParseError("unterminated comment", start);
                    if (data_[pos_] == '*' && data_[pos_ + 1] == '/') {
                        pos_ += 2;
                        break;
                    }
                    ++pos_;
                }
                continue;
            }
            break;
        }
    }

    /// Reads an upper-case keyword token; empty result means none present.
    std::string read_keyword() {
        std::string out;
        while (pos_ < data_.size() && is_keyword_char(data_[pos_])) {
            out.push_back(static_cast<char>(data_[pos_]));
            ++pos_;
        }
        return out;
    }

    void expect(char c, const char* what) {
        if (eof() || peek() != static_cast<std::uint8_t>(c))
            throw ParseError(std::string("expected '") + c + "' " + what, pos_);
        ++pos_;
    }

    /// Reads a 'string', decoding doubled apostrophes. pos_ is at the opening quote.
    std::string read_string() {
        const std::uint64_t start = pos_;
        ++pos_; // opening quote
        std::string out;
        while (true) {
            if (eof()) throw ParseError("unterminated string", start);
            const std::uint8_t c = data_[pos_];
            if (c == '\'') {
                if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '\'') {
                    out.push_back('\'');
                    pos_ += 2;
                    continue;
                }
                ++pos_;
                return out;
            }
            out.push_back(static_cast<char>(c));
            ++pos_;
        }
    }

private:
    std::span<const std::uint8_t> data_;
    std::uint64_t pos_ = 0;
};

StepValue parse_value(Scanner& s); // fwd

std::vector<StepValue> parse_value_list(Scanner& s) {
    // s is positioned after '('.
    std::vector<StepValue> items;
    s.skip_trivia();
    if (!s.eof() && s.peek() == ')') {
        s.expect(')', "closing list");
        return items;
    }
    while (true) {
        items.push_back(parse_value(s));
        s.skip_trivia();
        if (s.eof()) throw ParseError("unterminated parameter list", s.pos());
        if (s.peek() == ',') {
            s.expect(',', "between parameters");
            s.skip_trivia();
            continue;
        }
        s.expect(')', "closing list");
        return items;
    }
}

StepValue parse_value(Scanner& s) {
    s.skip_trivia();
    if (s.eof()) throw ParseError("unexpected end of input in parameter list", s.pos());
    StepValue v;
    const std::uint8_t c = s.peek();
    if (c == '\'') {
        v.kind = StepValue::Kind::String;
        v.text = s.read_string();
        return v;
    }
    if (c == '(') {
        s.expect('(', "opening list");
        v.kind = StepValue::Kind::List;
        v.items = parse_value_list(s);
        return v;
    }
    if (c == '$') {
        v.kind = StepValue::Kind::Null;
        s.seek(s.pos() + 1);
        return v;
    }
    if (c == '*') {
        v.kind = StepValue::Kind::Star;
        s.seek(s.pos() + 1);
        return v;
    }
    if (c == '.') {
        // enumeration literal .NAME.
        const std::uint64_t start = s.pos();
        s.seek(s.pos() + 1);
        std::string name = s.read_keyword();
        if (s.eof() || s.peek() != '.') throw ParseError("unterminated enumeration literal", start);
        s.seek(s.pos() + 1);
        v.kind = StepValue::Kind::EnumOrRef;
        v.text = name;
        return v;
    }
    if (c == '#') {
        s.seek(s.pos() + 1);
        std::string digits;
        while (!s.eof() && std::isdigit(s.peek())) {
            digits.push_back(static_cast<char>(s.peek()));
            s.seek(s.pos() + 1);
        }
        if (digits.empty()) throw ParseError("malformed instance reference", s.pos());
        v.kind = StepValue::Kind::EnumOrRef;
        v.text = "#" + digits;
        return v;
    }
    if (c == '+' || c == '-' || std::isdigit(c)) {
        std::string num;
        while (!s.eof()) {
            const std::uint8_t d = s.peek();
            if (std::isdigit(d) || d == '+' || d == '-' || d == '.' || d == 'E' || d == 'e') {
                num.push_back(static_cast<char>(d));
                s.seek(s.pos() + 1);
            } else {
                break;
            }
        }
        v.kind = StepValue::Kind::Number;
        v.text = num;
        return v;
    }
    if (is_keyword_char(c)) {
        // typed parameter or nested keyword, e.g. IFCBOOLEAN(.T.)
        const std::string kw = s.read_keyword();
        s.skip_trivia();
        if (!s.eof() && s.peek() == '(') {
            s.expect('(', "typed parameter");
            v.items = parse_value_list(s);
        }
        v.kind = StepValue::Kind::Other;
        v.text = kw;
        return v;
    }
    throw ParseError("unexpected character in parameter list", s.pos());
}

void require_leading_token(std::span<const std::uint8_t> data) {
    const std::size_t len = std::strlen(kStepLeadingToken);
    for (std::size_t i = 0; i < len; ++i)
        if (i >= data.size() || data[i] != static_cast<std::uint8_t>(kStepLeadingToken[i]))
            throw ParseError("not a STEP physical file (expected ISO-10303-21;)", i);
}

ParsedHeader parse_header_structure(std::span<const std::uint8_t> data) {
    Scanner s(data);
    require_leading_token(data);
    s.seek(std::strlen(kStepLeadingToken));

    s.skip_trivia();
    const std::uint64_t header_kw_at = s.pos();
    if (s.read_keyword() != "HEADER")
        throw ParseError("missing HEADER section", header_kw_at);
    s.skip_trivia();
    s.expect(';', "after HEADER");

    ParsedHeader parsed;
    while (true) {
        s.skip_trivia();
        const std::uint64_t kw_at = s.pos();
        const std::string kw = s.read_keyword();
        if (kw.empty()) {
            if (s.eof()) throw ParseError("missing ENDSEC; in HEADER section", s.size());
            throw ParseError("expected header entity or ENDSEC", kw_at);
        }
        if (kw == "ENDSEC") {
            s.skip_trivia();
            s.expect(';', "after ENDSEC");
            parsed.endsec_at = kw_at;
            parsed.end = s.pos();
            return parsed;
        }
        HeaderEntity entity;
        entity.name = kw;
        entity.offset = kw_at;
        s.skip_trivia();
        s.expect('(', "opening header entity parameters");
        entity.params = parse_value_list(s);
        s.skip_trivia();
        s.expect(';', "closing header entity");
        parsed.entities.push_back(std::move(entity));
    }
}

std::vector<std::string> string_list(const StepValue& v) {
    std::vector<std::string> out;
    if (v.kind != StepValue::Kind::List) return out;
    for (const auto& item : v.items)
        if (const auto* s = item.as_string()) out.push_back(*s);
    return out;
}

std::string string_at(const std::vector<StepValue>& params, std::size_t i) {
    if (i < params.size())
        if (const auto* s = params[i].as_string()) return *s;
    return {};
}

std::vector<std::string> list_at(const std::vector<StepValue>& params, std::size_t i) {
    return i < params.size() ? string_list(params[i]) : std::vector<std::string>{};
}

StepHeader map_header(const ParsedHeader& parsed) {
    StepHeader header;
    if (const auto* fd = parsed.find("FILE_DESCRIPTION")) {
        header.file_description.description = list_at(fd->params, 0);
        header.file_description.implementation_level = string_at(fd->params, 1);
    }
    if (const auto* fn = parsed.find("FILE_NAME")) {
        header.file_name.name = string_at(fn->params, 0);
        header.file_name.timestamp = string_at(fn->params, 1);
        header.file_name.authors = list_at(fn->params, 2);
        header.file_name.organizations = list_at(fn->params, 3);
        header.file_name.preprocessor_version = string_at(fn->params, 4);
        header.file_name.originating_system = string_at(fn->params, 5);
        header.file_name.authorization = string_at(fn->params, 6);
    }
    if (const auto* fs = parsed.find("FILE_SCHEMA")) header.file_schema = list_at(fs->params, 0);
    return header;
}

/// Scans the DATA section starting at `from`; returns nothing on success,
/// or the first-failure offset plus a message.
struct ScanFailure {
    std::uint64_t offset;
    std::string message;
};

std::optional<ScanFailure> scan_data_section(std::span<const std::uint8_t> data,
                                             std::uint64_t from) {
    Scanner s(data);
    s.seek(from);
    try {
        s.skip_trivia();
        std::uint64_t kw_at = s.pos();
        if (s.read_keyword() != "DATA") return ScanFailure{kw_at, "expected DATA section"};
        s.skip_trivia();
        s.expect(';', "after DATA");

        while (true) {
            s.skip_trivia();
            if (s.eof()) return ScanFailure{s.size(), "missing ENDSEC; in DATA section"};
            if (s.peek() == '#') {
                // instance: #<int> = <IDENT>( ... ) ;
                s.seek(s.pos() + 1);
                std::uint64_t digits_at = s.pos();
                std::string digits;
                while (!s.eof() && std::isdigit(s.peek())) {
                    digits.push_back(static_cast<char>(s.peek()));
                    s.seek(s.pos() + 1);
                }
                if (digits.empty()) return ScanFailure{digits_at, "expected instance number"};
                s.skip_trivia();
                if (s.eof() || s.peek() != '=')
                    return ScanFailure{s.pos(), "expected '=' in instance"};
                s.seek(s.pos() + 1);
                s.skip_trivia();
                std::uint64_t name_at = s.pos();
                if (s.read_keyword().empty())
                    return ScanFailure{name_at, "expected entity name in instance"};
                s.skip_trivia();
                if (s.eof() || s.peek() != '(')
                    return ScanFailure{s.pos(), "expected '(' after entity name"};

                // balanced parentheses, strings opaque
                int depth = 0;
                while (true) {
                    if (s.eof())
                        return ScanFailure{s.size(), "unbalanced parentheses at end of input"};
                    const std::uint8_t c = s.peek();
                    if (c == '\'') {
                        s.read_string(); // throws ParseError if unterminated
                        continue;
                    }
                    if (c == '/') {
                        const std::uint64_t before = s.pos();
                        s.skip_trivia(); // consumes a /* */ comment, if that is what this is
                        if (s.pos() == before) s.seek(before + 1);
                        continue;
                    }
                    if (c == '(') {
                        ++depth;
                        s.seek(s.pos() + 1);
                        continue;
                    }
                    if (c == ')') {
                        if (depth == 0) return ScanFailure{s.pos(), "unbalanced ')'"};
                        --depth;
                        s.seek(s.pos() + 1);
                        if (depth == 0) break;
                        continue;
                    }
                    if (c == ';' && depth > 0)
                        return ScanFailure{s.pos(), "unbalanced parentheses before ';'"};
                    s.seek(s.pos() + 1);
                }
                s.skip_trivia();
                if (s.eof() || s.peek() != ';')
                    return ScanFailure{s.pos(), "expected ';' closing instance"};
                s.seek(s.pos() + 1);
                continue;
            }
            kw_at = s.pos();
            const std::string kw = s.read_keyword();
            if (kw == "ENDSEC") {
                s.skip_trivia();
                if (s.eof() || s.peek() != ';')
                    return ScanFailure{s.pos(), "expected ';' after ENDSEC"};
                s.seek(s.pos() + 1);
                break;
            }
            return ScanFailure{kw_at, kw.empty() ? "unexpected character in DATA section"
                                                 : "unexpected keyword in DATA section"};
        }

        s.skip_trivia();
        const std::uint64_t end_at = s.pos();
        if (s.read_keyword() != "END-ISO-10303-21")
            return ScanFailure{end_at, "expected END-ISO-10303-21;"};
        s.skip_trivia();
        if (s.eof() || s.peek() != ';')
            return ScanFailure{s.pos(), "expected ';' after END-ISO-10303-21"};
        s.seek(s.pos() + 1);
        s.skip_trivia();
        if (!s.eof()) return ScanFailure{s.pos(), "content after END-ISO-10303-21;"};
        return std::nullopt;
    } catch (const ParseError& e) {
        return ScanFailure{e.offset(), e.what()};
    }
}

std::string escape_step_string(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        out.push_back(c);
        if (c == '\'') out.push_back('\'');
    }
    return out;
}

std::string render_string_list(const std::vector<std::string>& items) {
    std::string out = "(";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += "'" + escape_step_string(items[i]) + "'";
    }
    return out + ")";
}

} // namespace

StepHeader parse_step_header(std::span<const std::uint8_t> data) {
    const ParsedHeader parsed = parse_header_structure(data);
    if (parsed.find("FILE_SCHEMA") == nullptr)
        throw ParseError("missing FILE_SCHEMA in HEADER section", parsed.endsec_at);
    return map_header(parsed);
}

StepHeader parse_step_header(const std::string& data) {
    return parse_step_header(
        std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

VerificationReport verify_step(std::span<const std::uint8_t> data) {
    VerificationReport report;

    // leading-token
    {
        CheckResult c;
        c.check = "leading-token";
        const std::size_t len = std::strlen(kStepLeadingToken);
        std::size_t mismatch = len;
        for (std::size_t i = 0; i < len; ++i)
            if (i >= data.size() || data[i] != static_cast<std::uint8_t>(kStepLeadingToken[i])) {
                mismatch = i;
                break;
            }
        if (mismatch == len) {
            c.passed = true;
        } else {
            c.passed = false;
            c.offset = mismatch;
            c.detail = std::string("expected ") + kStepLeadingToken;
        }
        report.checks.push_back(std::move(c));
    }

    // header
    std::optional<ParsedHeader> parsed;
    {
        CheckResult c;
        c.check = "header";
        try {
            parsed = parse_header_structure(data);
            c.passed = true;
        } catch (const ParseError& e) {
            c.passed = false;
            c.offset = e.offset();
            c.detail = e.what();
        }
        report.checks.push_back(std::move(c));
    }

    // file-schema
    {
        CheckResult c;
        c.check = "file-schema";
        if (!parsed) {
            c.passed = false;
            c.detail = "skipped: HEADER section malformed";
            c.offset = report.checks[1].offset;
        } else if (const auto* fs = parsed->find("FILE_SCHEMA")) {
            const StepHeader header = map_header(*parsed);
            if (header.file_schema.empty()) {
                c.passed = false;
                c.offset = fs->offset;
                c.detail = "FILE_SCHEMA lists no schema";
            } else {
                c.passed = true;
                c.detail = header.file_schema.front();
            }
        } else {
            c.passed = false;
            c.offset = parsed->endsec_at;
            c.detail = "FILE_SCHEMA missing";
        }
        report.checks.push_back(std::move(c));
    }

    // data-section
    {
        CheckResult c;
        c.check = "data-section";
        if (!parsed) {
            c.passed = false;
            c.detail = "skipped: HEADER section malformed";
            c.offset = report.checks[1].offset;
        } else if (auto failure = scan_data_section(data, parsed->end)) {
            c.passed = false;
            c.offset = failure->offset;
            c.detail = failure->message;
        } else {
            c.passed = true;
        }
        report.checks.push_back(std::move(c));
    }

    return report;
}

VerificationReport verify_step(const std::string& data) {
    return verify_step(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string render_step_file(const StepHeader& header,
                             const std::vector<std::string>& data_instances) {
    std::string out = std::string(kStepLeadingToken) + "\nHEADER;\n";
    out += "FILE_DESCRIPTION(" + render_string_list(header.file_description.description) + ",'" +
           escape_step_string(header.file_description.implementation_level) + "');\n";
    out += "FILE_NAME('" + escape_step_string(header.file_name.name) + "','" +
           escape_step_string(header.file_name.timestamp) + "'," +
           render_string_list(header.file_name.authors) + "," +
           render_string_list(header.file_name.organizations) + ",'" +
           escape_step_string(header.file_name.preprocessor_version) + "','" +
           escape_step_string(header.file_name.originating_system) + "','" +
           escape_step_string(header.file_name.authorization) + "');\n";
    out += "FILE_SCHEMA(" + render_string_list(header.file_schema) + ");\n";
    out += "ENDSEC;\nDATA;\n";
    for (const auto& instance : data_instances) out += instance + "\n";
    out += "ENDSEC;\nEND-ISO-10303-21;\n";
    return out;
}

} // namespace bimcore
