#include "anonql/lexer.hpp"

#include <cctype>

#include "anonql/error.hpp"

namespace anonql {

std::vector<Token> lex(std::string_view sql) {
  std::vector<Token> out;
  unsigned line = 1;
  unsigned col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; k++) {
      if (sql[i + k] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
    }
    i += n;
  };
  while (i < sql.size()) {
    char ch = sql[i];
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      advance(1);
      continue;
    }
    if (ch == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      while (i < sql.size() && sql[i] != '\n') advance(1);
      continue;
    }
    Token tok;
    tok.line = line;
    tok.col = col;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      size_t j = i;
      while (j < sql.size() &&
             (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_'))
        j++;
      tok.kind = TokenKind::Ident;
      for (size_t k = i; k < j; k++)
        tok.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(sql[k]))));
      advance(j - i);
      out.push_back(std::move(tok));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) ||
        (ch == '.' && i + 1 < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      size_t j = i;
      bool seen_dot = false;
      bool seen_exp = false;
      while (j < sql.size()) {
        char c = sql[j];
        if (std::isdigit(static_cast<unsigned char>(c))) {
          j++;
        } else if (c == '.' && !seen_dot && !seen_exp) {
          seen_dot = true;
          j++;
        } else if ((c == 'e' || c == 'E') && !seen_exp && j + 1 < sql.size() &&
                   (std::isdigit(static_cast<unsigned char>(sql[j + 1])) ||
                    ((sql[j + 1] == '+' || sql[j + 1] == '-') && j + 2 < sql.size() &&
                     std::isdigit(static_cast<unsigned char>(sql[j + 2]))))) {
          seen_exp = true;
          j += (sql[j + 1] == '+' || sql[j + 1] == '-') ? 2 : 1;
        } else {
          break;
        }
      }
      tok.kind = TokenKind::Number;
      tok.text.assign(sql.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(tok));
      continue;
    }
    if (ch == '\'') {
      tok.kind = TokenKind::String;
      size_t j = i + 1;
      while (true) {
        if (j >= sql.size())
          throw Error(ErrorCode::SyntaxError, "unterminated string literal", tok.line, tok.col);
        if (sql[j] == '\'') {
          if (j + 1 < sql.size() && sql[j + 1] == '\'') {
            tok.text.push_back('\'');
            j += 2;
            continue;
          }
          break;
        }
        tok.text.push_back(sql[j]);
        j++;
      }
      advance(j + 1 - i);
      out.push_back(std::move(tok));
      continue;
    }
    auto two = sql.substr(i, 2);
    if (two == "<>" || two == "<=" || two == ">=" || two == "::" || two == "!=") {
      tok.kind = TokenKind::Symbol;
      tok.text = two == "!=" ? "<>" : std::string(two);
      advance(2);
      out.push_back(std::move(tok));
      continue;
    }
    static const std::string_view singles = "()*,+-/%^=<>.";
    if (singles.find(ch) != std::string_view::npos) {
      tok.kind = TokenKind::Symbol;
      tok.text = std::string(1, ch);
      advance(1);
      out.push_back(std::move(tok));
      continue;
    }
    throw Error(ErrorCode::SyntaxError, std::string("unexpected character '") + ch + "'", line,
                col);
  }
  Token end;
  end.kind = TokenKind::End;
  end.line = line;
  end.col = col;
  out.push_back(std::move(end));
  return out;
}

}  // namespace anonql
