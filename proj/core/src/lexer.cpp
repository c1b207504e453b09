#include "opflow/lexer.hpp"

#include <cctype>

namespace opflow {

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

struct Lexer {
  const std::string& src;
  std::size_t pos = 0;
  std::uint32_t line = 1;
  std::vector<Token> tokens;

  char peek(std::size_t ahead = 0) const {
    return pos + ahead < src.size() ? src[pos + ahead] : '\0';
  }

  bool starts_with(const char* s) const {
    return src.compare(pos, std::char_traits<char>::length(s), s) == 0;
  }

  void count_lines(std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i)
      if (src[i] == '\n') ++line;
  }

  void push(TokenKind kind, std::size_t start, std::uint32_t tok_line,
            std::string value = {}) {
    Token t;
    t.kind = kind;
    t.lexeme = src.substr(start, pos - start);
    t.value = std::move(value);
    t.line = tok_line;
    tokens.push_back(std::move(t));
  }

  void lex_html() {
    std::size_t start = pos;
    std::uint32_t start_line = line;
    while (pos < src.size() && !starts_with("<?php")) ++pos;
    count_lines(start, pos);
    if (pos > start) {
      Token t;
      t.kind = TokenKind::InlineHtml;
      t.lexeme = src.substr(start, pos - start);
      t.value = t.lexeme;
      t.line = start_line;
      tokens.push_back(std::move(t));
    }
    if (pos < src.size()) {
      std::size_t tag_start = pos;
      pos += 5;
      push(TokenKind::OpenTag, tag_start, line);
    }
  }

  void lex_string(char quote) {
    std::size_t start = pos;
    std::uint32_t start_line = line;
    ++pos;  // opening quote
    std::string decoded;
    while (true) {
      if (pos >= src.size())
        throw LexError(start_line, start, "unterminated string literal");
      char c = src[pos];
      if (c == quote) {
        ++pos;
        break;
      }
      if (c == '\n') ++line;
      if (c == '\\' && pos + 1 < src.size()) {
        char e = src[pos + 1];
        if (quote == '\'') {
          // Single quotes only decode \' and \\.
          if (e == '\'' || e == '\\') {
            decoded += e;
            pos += 2;
            continue;
          }
          decoded += c;
          ++pos;
          continue;
        }
        // Double quotes: keep the raw escape for the interpolation pass.
        decoded += c;
        decoded += e;
        if (e == '\n') ++line;
        pos += 2;
        continue;
      }
      decoded += c;
      ++pos;
    }
    push(quote == '\'' ? TokenKind::SqString : TokenKind::DqString, start, start_line,
         std::move(decoded));
  }

  void lex_number() {
    std::size_t start = pos;
    std::uint32_t start_line = line;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      pos += 2;
      while (std::isxdigit(static_cast<unsigned char>(peek()))) ++pos;
      push(TokenKind::IntLit, start, start_line);
      return;
    }
    bool is_float = false;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos;
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      is_float = true;
      ++pos;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos;
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos;
      ++pos;
      if (peek() == '+' || peek() == '-') ++pos;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        is_float = true;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos;
      } else {
        pos = save;
      }
    }
    push(is_float ? TokenKind::FloatLit : TokenKind::IntLit, start, start_line);
  }

  void lex_php() {
    while (pos < src.size()) {
      char c = peek();
      if (c == '\n') {
        ++line;
        ++pos;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f') {
        ++pos;
        continue;
      }
      if (starts_with("?>")) {
        std::size_t start = pos;
        pos += 2;
        push(TokenKind::CloseTag, start, line);
        return;  // back to HTML mode
      }
      if (starts_with("//") || c == '#') {
        while (pos < src.size() && src[pos] != '\n') ++pos;
        continue;
      }
      if (starts_with("/*")) {
        std::size_t start = pos;
        pos += 2;
        while (pos < src.size() && !starts_with("*/")) {
          if (src[pos] == '\n') ++line;
          ++pos;
        }
        if (pos >= src.size()) throw LexError(line, start, "unterminated comment");
        pos += 2;
        continue;
      }
      if (c == '\'' || c == '"') {
        lex_string(c);
        continue;
      }
      if (c == '$') {
        std::size_t start = pos;
        std::uint32_t tok_line = line;
        ++pos;
        if (is_ident_start(peek())) {
          std::size_t name_start = pos;
          while (is_ident_char(peek())) ++pos;
          push(TokenKind::Variable, start, tok_line,
               src.substr(name_start, pos - name_start));
        } else {
          push(TokenKind::Dollar, start, tok_line);
        }
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number();
        continue;
      }
      if (is_ident_start(c)) {
        std::size_t start = pos;
        std::uint32_t tok_line = line;
        while (is_ident_char(peek())) ++pos;
        push(TokenKind::Identifier, start, tok_line, src.substr(start, pos - start));
        continue;
      }

      std::size_t start = pos;
      std::uint32_t tok_line = line;
      auto op = [&](TokenKind kind, std::size_t len) {
        pos += len;
        push(kind, start, tok_line);
      };
      switch (c) {
        case '+':
          if (peek(1) == '+') { op(TokenKind::Inc, 2); break; }
          if (peek(1) == '=') { op(TokenKind::PlusEq, 2); break; }
          op(TokenKind::Plus, 1);
          break;
        case '-':
          if (peek(1) == '-') { op(TokenKind::Dec, 2); break; }
          if (peek(1) == '=') { op(TokenKind::MinusEq, 2); break; }
          if (peek(1) == '>') { op(TokenKind::Arrow, 2); break; }
          op(TokenKind::Minus, 1);
          break;
        case '*':
          if (peek(1) == '=') { op(TokenKind::StarEq, 2); break; }
          op(TokenKind::Star, 1);
          break;
        case '/':
          if (peek(1) == '=') { op(TokenKind::SlashEq, 2); break; }
          op(TokenKind::Slash, 1);
          break;
        case '%': op(TokenKind::Percent, 1); break;
        case '.':
          if (peek(1) == '=') { op(TokenKind::DotEq, 2); break; }
          if (peek(1) == '.' && peek(2) == '.') { op(TokenKind::Ellipsis, 3); break; }
          op(TokenKind::Dot, 1);
          break;
        case '=':
          if (peek(1) == '=' && peek(2) == '=') { op(TokenKind::EqEqEq, 3); break; }
          if (peek(1) == '=') { op(TokenKind::EqEq, 2); break; }
          if (peek(1) == '>') { op(TokenKind::DoubleArrow, 2); break; }
          op(TokenKind::Assign, 1);
          break;
        case '!':
          if (peek(1) == '=' && peek(2) == '=') { op(TokenKind::BangEqEq, 3); break; }
          if (peek(1) == '=') { op(TokenKind::BangEq, 2); break; }
          op(TokenKind::Bang, 1);
          break;
        case '<':
          if (peek(1) == '=') { op(TokenKind::Le, 2); break; }
          if (peek(1) == '>') { op(TokenKind::BangEq, 2); break; }
          op(TokenKind::Lt, 1);
          break;
        case '>':
          if (peek(1) == '=') { op(TokenKind::Ge, 2); break; }
          op(TokenKind::Gt, 1);
          break;
        case '&':
          if (peek(1) == '&') { op(TokenKind::AndAnd, 2); break; }
          op(TokenKind::Amp, 1);
          break;
        case '|':
          if (peek(1) == '|') { op(TokenKind::OrOr, 2); break; }
          throw LexError(line, pos, "illegal character '|'");
        case '?': op(TokenKind::Question, 1); break;
        case ':':
          if (peek(1) == ':') { op(TokenKind::DoubleColon, 2); break; }
          op(TokenKind::Colon, 1);
          break;
        case '(': op(TokenKind::LParen, 1); break;
        case ')': op(TokenKind::RParen, 1); break;
        case '{': op(TokenKind::LBrace, 1); break;
        case '}': op(TokenKind::RBrace, 1); break;
        case '[': op(TokenKind::LBracket, 1); break;
        case ']': op(TokenKind::RBracket, 1); break;
        case ';': op(TokenKind::Semi, 1); break;
        case ',': op(TokenKind::Comma, 1); break;
        default:
          throw LexError(line, pos, std::string("illegal character '") + c + "'");
      }
    }
  }

  std::vector<Token> run() {
    while (pos < src.size()) {
      lex_html();
      if (pos < src.size()) lex_php();
    }
    Token eof;
    eof.kind = TokenKind::Eof;
    eof.line = line;
    tokens.push_back(std::move(eof));
    return std::move(tokens);
  }
};

}  // namespace

std::vector<Token> lex(const std::string& source) {
  if (source.size() > 16u * 1024 * 1024)
    throw LexError(1, 0, "source exceeds 16 MiB limit");
  Lexer lexer{source};
  return lexer.run();
}

const char* token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::InlineHtml: return "inline-html";
    case TokenKind::OpenTag: return "<?php";
    case TokenKind::CloseTag: return "?>";
    case TokenKind::Variable: return "variable";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::IntLit: return "int";
    case TokenKind::FloatLit: return "float";
    case TokenKind::SqString: return "string";
    case TokenKind::DqString: return "string";
    case TokenKind::Plus: return "+";
    case TokenKind::Minus: return "-";
    case TokenKind::Star: return "*";
    case TokenKind::Slash: return "/";
    case TokenKind::Percent: return "%";
    case TokenKind::Dot: return ".";
    case TokenKind::Assign: return "=";
    case TokenKind::PlusEq: return "+=";
    case TokenKind::MinusEq: return "-=";
    case TokenKind::StarEq: return "*=";
    case TokenKind::SlashEq: return "/=";
    case TokenKind::DotEq: return ".=";
    case TokenKind::EqEq: return "==";
    case TokenKind::BangEq: return "!=";
    case TokenKind::EqEqEq: return "===";
    case TokenKind::BangEqEq: return "!==";
    case TokenKind::Lt: return "<";
    case TokenKind::Gt: return ">";
    case TokenKind::Le: return "<=";
    case TokenKind::Ge: return ">=";
    case TokenKind::AndAnd: return "&&";
    case TokenKind::OrOr: return "||";
    case TokenKind::Bang: return "!";
    case TokenKind::Question: return "?";
    case TokenKind::Colon: return ":";
    case TokenKind::LParen: return "(";
    case TokenKind::RParen: return ")";
    case TokenKind::LBrace: return "{";
    case TokenKind::RBrace: return "}";
    case TokenKind::LBracket: return "[";
    case TokenKind::RBracket: return "]";
    case TokenKind::Semi: return ";";
    case TokenKind::Comma: return ",";
    case TokenKind::Arrow: return "->";
    case TokenKind::DoubleArrow: return "=>";
    case TokenKind::DoubleColon: return "::";
    case TokenKind::Inc: return "++";
    case TokenKind::Dec: return "--";
    case TokenKind::Ellipsis: return "...";
    case TokenKind::Amp: return "&";
    case TokenKind::Dollar: return "$";
    case TokenKind::Eof: return "eof";
  }
  return "?";
}

}  // namespace opflow
