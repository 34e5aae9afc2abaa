use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::SqlError;

/// Words that terminate a clause and therefore cannot be read as an alias.
const RESERVED: &[&str] = &[
    "select",
    "distinct",
    "all",
    "from",
    "where",
    "group",
    "by",
    "having",
    "order",
    "limit",
    "offset",
    "fetch",
    "union",
    "intersect",
    "except",
    "join",
    "inner",
    "left",
    "right",
    "full",
    "outer",
    "cross",
    "natural",
    "on",
    "using",
    "and",
    "or",
    "not",
    "as",
    "in",
    "exists",
    "is",
    "null",
    "between",
    "like",
    "ilike",
    "case",
    "when",
    "then",
    "else",
    "end",
    "over",
    "window",
    "with",
    "lateral",
    "any",
    "some",
    "true",
    "false",
    "qualify",
];

/// Parse a single statement of the supported fragment.
///
/// Unquoted identifiers are lower-cased; a trailing semicolon is optional.
pub fn parse_query(sql: &str) -> Result<ParsedQuery, SqlError> {
    let tokens = tokenize(sql)?;
    let mut parser = Parser { tokens, pos: 0 };
    let query = parser.query()?;
    parser.finish()?;
    Ok(query)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn syntax(&self, expected: &str) -> SqlError {
        let tok = self.peek();
        SqlError::Syntax {
            line: tok.line,
            column: tok.column,
            token: tok.describe(),
            expected: expected.to_owned(),
        }
    }

    fn unsupported(&self, feature: &str) -> SqlError {
        let tok = self.peek();
        SqlError::Unsupported {
            feature: feature.to_owned(),
            line: tok.line,
            column: tok.column,
        }
    }

    fn at_word(&self, word: &str) -> bool {
        self.peek().is_word(word)
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if self.at_word(word) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), SqlError> {
        if self.eat_word(word) {
            Ok(())
        } else {
            Err(self.syntax(&word.to_ascii_uppercase()))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), SqlError> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(self.syntax(what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SqlError> {
        match &self.peek().kind {
            TokenKind::Word(w) if !RESERVED.contains(&w.as_str()) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            TokenKind::QuotedIdent(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => Err(self.syntax(what)),
        }
    }

    fn at_ident(&self) -> bool {
        match &self.peek().kind {
            TokenKind::Word(w) => !RESERVED.contains(&w.as_str()),
            TokenKind::QuotedIdent(_) => true,
            _ => false,
        }
    }

    fn finish(&mut self) -> Result<(), SqlError> {
        for (word, feature) in [
            ("order", "ORDER BY"),
            ("limit", "LIMIT"),
            ("offset", "OFFSET"),
            ("fetch", "FETCH"),
            ("union", "UNION"),
            ("intersect", "INTERSECT"),
            ("except", "EXCEPT"),
            ("window", "window functions"),
            ("qualify", "QUALIFY"),
        ] {
            if self.at_word(word) {
                return Err(self.unsupported(feature));
            }
        }
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else if self.peek().kind == TokenKind::Semicolon {
            self.bump();
            if self.peek().kind == TokenKind::Eof {
                Ok(())
            } else {
                Err(self.unsupported("multiple statements"))
            }
        } else {
            Err(self.syntax("end of statement"))
        }
    }

    fn query(&mut self) -> Result<ParsedQuery, SqlError> {
        if self.at_word("with") {
            return Err(self.unsupported("WITH (common table expressions)"));
        }
        self.expect_word("select")?;
        let mut query = ParsedQuery::default();
        if self.eat_word("distinct") {
            query.distinct = true;
        } else {
            self.eat_word("all");
        }
        query.select_items = self.select_list()?;
        self.expect_word("from")?;
        self.parse_from_list(&mut query)?;
        if self.eat_word("where") {
            let conjuncts = self.condition()?;
            query.where_conjuncts.extend(conjuncts);
        }
        if self.eat_word("group") {
            self.expect_word("by")?;
            loop {
                let col = self.column_ref()?;
                self.reject_trailing_arithmetic()?;
                query.group_by.push(col);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        if self.eat_word("having") {
            query.having = Some(self.having()?);
        }
        Ok(query)
    }

    fn select_list(&mut self) -> Result<Vec<SelectItem>, SqlError> {
        if self.peek().kind == TokenKind::Star {
            return Err(self.unsupported("SELECT *"));
        }
        let mut items = Vec::new();
        loop {
            let literal_pos = (self.peek().line, self.peek().column);
            let expr = self.select_expr()?;
            let alias = if self.eat_word("as") || self.at_ident() {
                Some(self.ident("alias")?)
            } else {
                None
            };
            if matches!(expr, SelectExpr::Literal(_))
                && (!items.is_empty() || self.peek().kind == TokenKind::Comma)
            {
                return Err(SqlError::Unsupported {
                    feature: "constant mixed with other select items".into(),
                    line: literal_pos.0,
                    column: literal_pos.1,
                });
            }
            items.push(SelectItem { expr, alias });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        Ok(items)
    }

    fn select_expr(&mut self) -> Result<SelectExpr, SqlError> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Number(n) => {
                self.bump();
                self.reject_trailing_arithmetic()?;
                Ok(SelectExpr::Literal(*n))
            }
            TokenKind::Str(_) => Err(self.unsupported("string constant in select list")),
            TokenKind::LParen => {
                if self.peek_at(1).is_word("select") {
                    Err(self.unsupported("subquery"))
                } else {
                    Err(self.unsupported("parenthesized expression in select list"))
                }
            }
            TokenKind::Word(w) if w == "case" => Err(self.unsupported("CASE expression")),
            TokenKind::Word(w) if self.peek_at(1).kind == TokenKind::LParen => {
                let name = w.clone();
                let call = self.function_call(&name)?;
                Ok(SelectExpr::Aggregate(call))
            }
            _ => {
                let col = self.column_ref()?;
                self.reject_trailing_arithmetic()?;
                Ok(SelectExpr::Column(col))
            }
        }
    }

    /// `name(...)` where name is an aggregate; the cursor sits on `name`.
    fn function_call(&mut self, name: &str) -> Result<AggregateCall, SqlError> {
        let Some(func) = AggFunc::from_name(name) else {
            return Err(self.unsupported(&format!("function {}", name.to_ascii_uppercase())));
        };
        self.bump();
        self.expect(TokenKind::LParen, "(")?;
        if self.peek().kind == TokenKind::Star {
            return Err(self.unsupported(&format!("{}(*)", func.sql_name())));
        }
        let distinct = self.eat_word("distinct");
        if !distinct {
            self.eat_word("all");
        }
        if self.peek().kind == TokenKind::LParen && self.peek_at(1).is_word("select") {
            return Err(self.unsupported("subquery"));
        }
        if !self.at_ident() {
            return match self.peek().kind {
                TokenKind::Number(_) | TokenKind::Str(_) => {
                    Err(self.unsupported("aggregate over a constant"))
                }
                _ => Err(self.syntax("column reference")),
            };
        }
        let arg = self.column_ref()?;
        self.reject_trailing_arithmetic()?;
        self.expect(TokenKind::RParen, ")")?;
        if self.at_word("over") {
            return Err(self.unsupported("window functions"));
        }
        if self.at_word("filter") {
            return Err(self.unsupported("aggregate FILTER clause"));
        }
        self.reject_trailing_arithmetic()?;
        Ok(AggregateCall {
            func,
            arg,
            distinct,
        })
    }

    fn column_ref(&mut self) -> Result<ColumnRef, SqlError> {
        let first = self.ident("column reference")?;
        if self.eat(&TokenKind::Dot) {
            if self.peek().kind == TokenKind::Star {
                return Err(self.unsupported("qualified wildcard"));
            }
            let column = self.ident("column name")?;
            if self.peek().kind == TokenKind::Dot {
                return Err(self.unsupported("schema-qualified column"));
            }
            Ok(ColumnRef {
                qualifier: Some(first),
                column,
            })
        } else {
            if self.peek().kind == TokenKind::LParen {
                return Err(self.unsupported(&format!("function {}", first.to_ascii_uppercase())));
            }
            Ok(ColumnRef {
                qualifier: None,
                column: first,
            })
        }
    }

    fn reject_trailing_arithmetic(&self) -> Result<(), SqlError> {
        match self.peek().kind {
            TokenKind::Plus
            | TokenKind::Minus
            | TokenKind::Star
            | TokenKind::Slash
            | TokenKind::Percent
            | TokenKind::Concat => Err(self.unsupported("arithmetic expression")),
            _ => Ok(()),
        }
    }

    fn parse_from_list(&mut self, query: &mut ParsedQuery) -> Result<(), SqlError> {
        query.from_items.push(self.table_ref()?);
        loop {
            if self.eat(&TokenKind::Comma) {
                query.from_items.push(self.table_ref()?);
                continue;
            }
            if self.at_word("left")
                || self.at_word("right")
                || self.at_word("full")
                || self.at_word("outer")
            {
                return Err(self.unsupported("OUTER JOIN"));
            }
            if self.at_word("natural") {
                return Err(self.unsupported("NATURAL JOIN"));
            }
            if self.eat_word("cross") {
                self.expect_word("join")?;
                query.from_items.push(self.table_ref()?);
                continue;
            }
            let inner = self.eat_word("inner");
            if self.eat_word("join") {
                query.from_items.push(self.table_ref()?);
                if self.at_word("using") {
                    return Err(self.unsupported("JOIN ... USING"));
                }
                self.expect_word("on")?;
                let conjuncts = self.condition()?;
                query.where_conjuncts.extend(conjuncts);
                continue;
            } else if inner {
                return Err(self.syntax("JOIN"));
            }
            break;
        }
        Ok(())
    }

    fn table_ref(&mut self) -> Result<FromItem, SqlError> {
        if self.peek().kind == TokenKind::LParen {
            return Err(self.unsupported("subquery"));
        }
        if self.at_word("lateral") {
            return Err(self.unsupported("LATERAL"));
        }
        let table = self.ident("table name")?;
        if self.peek().kind == TokenKind::Dot {
            return Err(self.unsupported("schema-qualified table"));
        }
        if self.peek().kind == TokenKind::LParen {
            return Err(self.unsupported("table function"));
        }
        let alias = if self.eat_word("as") || self.at_ident() {
            Some(self.ident("alias")?)
        } else {
            None
        };
        Ok(FromItem { table, alias })
    }

    /// A conjunction of simple predicates.
    fn condition(&mut self) -> Result<Vec<Conjunct>, SqlError> {
        let mut out = Vec::new();
        loop {
            self.conjunct(&mut out)?;
            if self.at_word("or") {
                return Err(self.unsupported("OR"));
            }
            if !self.eat_word("and") {
                break;
            }
        }
        Ok(out)
    }

    fn conjunct(&mut self, out: &mut Vec<Conjunct>) -> Result<(), SqlError> {
        if self.at_word("not") {
            return Err(self.unsupported("NOT"));
        }
        if self.at_word("exists") {
            return Err(self.unsupported("subquery"));
        }
        if self.peek().kind == TokenKind::LParen {
            if self.peek_at(1).is_word("select") {
                return Err(self.unsupported("subquery"));
            }
            self.bump();
            let inner = self.condition()?;
            self.expect(TokenKind::RParen, ")")?;
            out.extend(inner);
            return Ok(());
        }
        let left = self.operand()?;
        for (word, feature) in [
            ("in", "IN predicate"),
            ("is", "IS [NOT] NULL"),
            ("between", "BETWEEN"),
            ("like", "LIKE"),
            ("ilike", "ILIKE"),
            ("not", "NOT"),
        ] {
            if self.at_word(word) {
                let feature = if word == "in"
                    && self.peek_at(1).kind == TokenKind::LParen
                    && self.peek_at(2).is_word("select")
                {
                    "subquery"
                } else {
                    feature
                };
                return Err(self.unsupported(feature));
            }
        }
        let op = match self.peek().kind {
            TokenKind::Eq => Comparator::Eq,
            TokenKind::Ne => Comparator::Ne,
            TokenKind::Lt => Comparator::Lt,
            TokenKind::Le => Comparator::Le,
            TokenKind::Gt => Comparator::Gt,
            TokenKind::Ge => Comparator::Ge,
            _ => return Err(self.syntax("comparison operator")),
        };
        let op_tok = self.bump();
        if self.at_word("any") || self.at_word("all") || self.at_word("some") {
            return Err(self.unsupported("subquery"));
        }
        if self.peek().kind == TokenKind::LParen && self.peek_at(1).is_word("select") {
            return Err(self.unsupported("subquery"));
        }
        let right = self.operand()?;
        let conjunct = match (left, right) {
            (Operand::Column(a), Operand::Column(b)) => {
                if op != Comparator::Eq {
                    return Err(SqlError::Unsupported {
                        feature: "non-equality comparison between columns".into(),
                        line: op_tok.line,
                        column: op_tok.column,
                    });
                }
                Conjunct::ColumnEq(a, b)
            }
            (Operand::Column(a), Operand::Literal(v)) => Conjunct::Compare(a, op, v),
            (Operand::Literal(v), Operand::Column(a)) => Conjunct::Compare(a, op.flipped(), v),
            (Operand::Literal(_), Operand::Literal(_)) => {
                return Err(SqlError::Unsupported {
                    feature: "comparison between two constants".into(),
                    line: op_tok.line,
                    column: op_tok.column,
                })
            }
        };
        out.push(conjunct);
        Ok(())
    }

    fn operand(&mut self) -> Result<Operand, SqlError> {
        let operand = match self.peek().kind.clone() {
            TokenKind::Number(n) => {
                self.bump();
                Operand::Literal(Literal::Int(n))
            }
            TokenKind::Minus => {
                self.bump();
                match self.peek().kind {
                    TokenKind::Number(n) => {
                        self.bump();
                        Operand::Literal(Literal::Int(-n))
                    }
                    _ => return Err(self.unsupported("arithmetic expression")),
                }
            }
            TokenKind::Str(s) => {
                self.bump();
                Operand::Literal(Literal::Str(s))
            }
            TokenKind::Word(ref w) if w == "null" => return Err(self.unsupported("NULL constant")),
            TokenKind::Word(ref w) if w == "true" || w == "false" => {
                return Err(self.unsupported("boolean constant"))
            }
            TokenKind::Word(ref w) if w == "case" => {
                return Err(self.unsupported("CASE expression"))
            }
            TokenKind::Word(ref w)
                if self.peek_at(1).kind == TokenKind::LParen && AggFunc::from_name(w).is_some() =>
            {
                return Err(self.unsupported("aggregate in WHERE clause"))
            }
            _ => Operand::Column(self.column_ref()?),
        };
        self.reject_trailing_arithmetic()?;
        Ok(operand)
    }

    fn having(&mut self) -> Result<HavingClause, SqlError> {
        let agg_first = matches!(&self.peek().kind, TokenKind::Word(w) if AggFunc::from_name(w).is_some())
            && self.peek_at(1).kind == TokenKind::LParen;
        let (aggregate, op, value) = if agg_first {
            let name = match &self.peek().kind {
                TokenKind::Word(w) => w.clone(),
                _ => unreachable!(),
            };
            let call = self.function_call(&name)?;
            let op = self.comparator()?;
            let value = self.having_literal()?;
            (call, op, value)
        } else {
            let value = match self.peek().kind {
                TokenKind::Number(_) | TokenKind::Str(_) | TokenKind::Minus => {
                    self.having_literal()?
                }
                _ => {
                    return Err(
                        self.unsupported("HAVING predicate other than an aggregate comparison")
                    )
                }
            };
            let op = self.comparator()?;
            let name = match &self.peek().kind {
                TokenKind::Word(w) if AggFunc::from_name(w).is_some() => w.clone(),
                _ => {
                    return Err(
                        self.unsupported("HAVING predicate other than an aggregate comparison")
                    )
                }
            };
            let call = self.function_call(&name)?;
            (call, op.flipped(), value)
        };
        if self.at_word("and") || self.at_word("or") {
            return Err(self.unsupported("compound HAVING predicate"));
        }
        Ok(HavingClause {
            aggregate,
            op,
            value,
        })
    }

    fn comparator(&mut self) -> Result<Comparator, SqlError> {
        let op = match self.peek().kind {
            TokenKind::Eq => Comparator::Eq,
            TokenKind::Ne => Comparator::Ne,
            TokenKind::Lt => Comparator::Lt,
            TokenKind::Le => Comparator::Le,
            TokenKind::Gt => Comparator::Gt,
            TokenKind::Ge => Comparator::Ge,
            _ => return Err(self.syntax("comparison operator")),
        };
        self.bump();
        if self.peek().kind == TokenKind::LParen && self.peek_at(1).is_word("select") {
            return Err(self.unsupported("subquery"));
        }
        Ok(op)
    }

    fn having_literal(&mut self) -> Result<Literal, SqlError> {
        let lit = match self.peek().kind.clone() {
            TokenKind::Number(n) => Literal::Int(n),
            TokenKind::Str(s) => Literal::Str(s),
            TokenKind::Minus => {
                self.bump();
                match self.peek().kind {
                    TokenKind::Number(n) => Literal::Int(-n),
                    _ => return Err(self.unsupported("arithmetic expression")),
                }
            }
            _ => {
                return Err(self.unsupported("HAVING predicate other than an aggregate comparison"))
            }
        };
        self.bump();
        self.reject_trailing_arithmetic()?;
        Ok(lit)
    }
}

enum Operand {
    Column(ColumnRef),
    Literal(Literal),
}
