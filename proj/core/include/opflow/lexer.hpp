#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace opflow {

enum class TokenKind : std::uint8_t {
  InlineHtml,
  OpenTag,   // <?php
  CloseTag,  // ?>
  Variable,  // $name; value holds the sigil-free name
  Identifier,
  IntLit,
  FloatLit,
  SqString,  // single-quoted; value holds the decoded bytes
  DqString,  // double-quoted; value holds the *raw* content (interpolation later)
  // punctuation / operators
  Plus, Minus, Star, Slash, Percent, Dot,
  Assign, PlusEq, MinusEq, StarEq, SlashEq, DotEq,
  EqEq, BangEq, EqEqEq, BangEqEq, Lt, Gt, Le, Ge,
  AndAnd, OrOr, Bang,
  Question, Colon,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Semi, Comma,
  Arrow,        // ->
  DoubleArrow,  // =>
  DoubleColon,  // ::
  Inc, Dec,     // ++ --
  Ellipsis,     // ...
  Amp,          // &
  Dollar,       // bare $ (variable variables)
  Eof,
};

struct Token {
  TokenKind kind = TokenKind::Eof;
  std::string lexeme;  // raw source slice
  std::string value;   // decoded payload where it differs from the lexeme
  std::uint32_t line = 1;
};

struct LexError : std::runtime_error {
  LexError(std::uint32_t line, std::size_t offset, const std::string& reason)
      : std::runtime_error("lex:" + std::to_string(line) + ": " + reason),
        line(line),
        offset(offset) {}
  std::uint32_t line;
  std::size_t offset;
};

// Tokenizes a PHP source file; inline HTML outside <?php ... ?> becomes a
// single InlineHtml token per chunk. Throws LexError on unterminated strings
// or illegal characters inside PHP mode.
std::vector<Token> lex(const std::string& source);

const char* token_kind_name(TokenKind kind);

}  // namespace opflow
