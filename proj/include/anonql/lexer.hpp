#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace anonql {

enum class TokenKind { Ident, Number, String, Symbol, End };

/// Identifiers arrive lower-cased; string tokens hold the unescaped content;
/// numbers keep their raw spelling (the parser decides integer vs real).
struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  unsigned line = 1;
  unsigned col = 1;

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  bool ident(std::string_view t) const { return is(TokenKind::Ident, t); }
  bool symbol(std::string_view t) const { return is(TokenKind::Symbol, t); }
};

/// Tokenizes a statement; the final element is always an End token.
std::vector<Token> lex(std::string_view sql);

}  // namespace anonql
