use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::lexer::{tokenize, Token, TokenKind};
use super::{Dialect, IdentRole, LiteralKind, NodeKind, OtherTag, ParseError, Span, SqlNode};

const AGGREGATES: &[&str] = &["COUNT", "SUM", "AVG", "MIN", "MAX", "TOTAL", "GROUP_CONCAT"];

/// Words that end an expression or clause and so cannot be a bare alias.
const RESERVED: &[&str] = &[
    "ALL", "AND", "AS", "ASC", "BETWEEN", "BY", "CASE", "CAST", "COLLATE", "CROSS", "DESC", "DISTINCT", "ELSE",
    "END", "ESCAPE", "EXCEPT", "EXISTS", "FILTER", "FROM", "FULL", "GLOB", "GROUP", "HAVING", "IN", "INDEXED",
    "INNER", "INTERSECT", "IS", "ISNULL", "JOIN", "LEFT", "LIKE", "LIMIT", "NATURAL", "NOT", "NOTNULL", "NULL",
    "NULLS", "OFFSET", "ON", "OR", "ORDER", "OUTER", "OVER", "RIGHT", "SELECT", "THEN", "UNION", "USING",
    "VALUES", "WHEN", "WHERE", "WINDOW", "WITH",
];

const NON_SELECT_STATEMENTS: &[&str] = &[
    "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "PRAGMA", "REPLACE", "ATTACH", "DETACH", "BEGIN",
    "COMMIT", "VACUUM", "ANALYZE", "EXPLAIN",
];

/// Parses one SELECT statement into a normalized tree with preorder ids.
///
/// Constructs outside the supported subset (CTEs, window functions, DML,
/// schema-qualified names, ...) yield [`ParseError::Unsupported`] so callers
/// can skip the query instead of mislabeling it.
pub fn parse_sql(text: &str, dialect: Dialect) -> Result<SqlNode, ParseError> {
    let Dialect::Sqlite = dialect;
    if text.trim().is_empty() {
        return Err(ParseError::syntax(0, "empty query"));
    }
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, text_len: text.len() };
    let mut root = parser.statement()?;
    while parser.eat_symbol(";") {}
    if let Some(tok) = parser.peek() {
        return Err(ParseError::syntax(tok.span.start, "unexpected trailing input"));
    }
    root.renumber();
    Ok(root)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    text_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.text_len, |t| t.span.start)
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn at_symbol(&self, sym: &str) -> bool {
        self.peek().is_some_and(|t| t.is_symbol(sym))
    }

    fn eat_keyword(&mut self, kw: &str) -> Option<Span> {
        if self.at_keyword(kw) {
            self.advance().map(|t| t.span)
        } else {
            None
        }
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.at_symbol(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Span, ParseError> {
        self.eat_keyword(kw).ok_or_else(|| ParseError::syntax(self.here(), alloc::format!("expected {kw}")))
    }

    fn expect_symbol(&mut self, sym: &str) -> Result<Span, ParseError> {
        if self.at_symbol(sym) {
            Ok(self.advance().map(|t| t.span).unwrap_or_default())
        } else {
            Err(ParseError::syntax(self.here(), alloc::format!("expected `{sym}`")))
        }
    }

    fn reject_keywords(&self, words: &[&str], what: &str) -> Result<(), ParseError> {
        if words.iter().any(|w| self.at_keyword(w)) {
            return Err(ParseError::unsupported(self.here(), what));
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<SqlNode, ParseError> {
        let Some(first) = self.peek() else {
            return Err(ParseError::syntax(self.here(), "empty query"));
        };
        let start = first.span.start;
        if first.is_keyword("WITH") {
            return Err(ParseError::unsupported(start, "common table expression"));
        }
        if first.is_keyword("VALUES") {
            return Err(ParseError::unsupported(start, "VALUES statement"));
        }
        if NON_SELECT_STATEMENTS.iter().any(|kw| first.is_keyword(kw)) {
            return Err(ParseError::unsupported(start, "non-SELECT statement"));
        }
        self.query()
    }

    /// Compound select with optional trailing ORDER BY / LIMIT.
    fn query(&mut self) -> Result<SqlNode, ParseError> {
        let mut node = self.select_core()?;
        loop {
            let tag = if self.eat_keyword("UNION").is_some() {
                if self.eat_keyword("ALL").is_some() {
                    OtherTag::UnionAll
                } else {
                    OtherTag::Union
                }
            } else if self.eat_keyword("INTERSECT").is_some() {
                OtherTag::Intersect
            } else if self.eat_keyword("EXCEPT").is_some() {
                OtherTag::Except
            } else {
                break;
            };
            let right = self.select_core()?;
            let span = node.span.merge(right.span);
            node = SqlNode::new(NodeKind::Other(tag), span).with_children(vec![node, right]);
        }
        if let Some(order) = self.order_by()? {
            node.span = node.span.merge(order.span);
            node.children.push(order);
        }
        if let Some(limit) = self.limit()? {
            node.span = node.span.merge(limit.span);
            node.children.push(limit);
        }
        Ok(node)
    }

    fn select_core(&mut self) -> Result<SqlNode, ParseError> {
        let start = self.expect_keyword("SELECT")?;
        let mut children = Vec::new();
        if let Some(span) = self.eat_keyword("DISTINCT") {
            children.push(SqlNode::new(NodeKind::Other(OtherTag::Distinct), span));
        } else {
            self.eat_keyword("ALL");
        }
        loop {
            children.push(self.projection()?);
            if !self.eat_symbol(",") {
                break;
            }
        }
        if let Some(from_kw) = self.eat_keyword("FROM") {
            let source = self.table_source()?;
            let span = from_kw.merge(source.span);
            children.push(SqlNode::new(NodeKind::From, span).with_children(vec![source]));
            while let Some(join) = self.join()? {
                children.push(join);
            }
        }
        if let Some(kw) = self.eat_keyword("WHERE") {
            let cond = self.expr()?;
            children.push(SqlNode::new(NodeKind::Where, kw.merge(cond.span)).with_children(vec![cond]));
        }
        if let Some(kw) = self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            let exprs = self.expr_list()?;
            let span = exprs.iter().fold(kw, |s, e| s.merge(e.span));
            children.push(SqlNode::new(NodeKind::GroupBy, span).with_children(exprs));
        }
        if let Some(kw) = self.eat_keyword("HAVING") {
            let cond = self.expr()?;
            children.push(SqlNode::new(NodeKind::Having, kw.merge(cond.span)).with_children(vec![cond]));
        }
        self.reject_keywords(&["WINDOW"], "named window")?;
        let span = children.iter().fold(start, |s, c| s.merge(c.span));
        Ok(SqlNode::new(NodeKind::Select, span).with_children(children))
    }

    fn projection(&mut self) -> Result<SqlNode, ParseError> {
        if let Some(tok) = self.peek() {
            if tok.is_symbol("*") {
                let span = tok.span;
                self.pos += 1;
                return Ok(SqlNode::new(NodeKind::Star, span));
            }
            if is_name(tok) && self.peek_at(1).is_some_and(|t| t.is_symbol(".")) {
                if let Some(star) = self.peek_at(2).filter(|t| t.is_symbol("*")) {
                    let star_span = star.span;
                    let qualifier = self.identifier(IdentRole::Qualifier)?;
                    self.pos += 2;
                    let span = qualifier.span.merge(star_span);
                    return Ok(SqlNode::new(NodeKind::Star, span).with_children(vec![qualifier]));
                }
            }
        }
        let expr = self.expr()?;
        self.with_alias(expr)
    }

    fn with_alias(&mut self, expr: SqlNode) -> Result<SqlNode, ParseError> {
        let explicit = self.eat_keyword("AS").is_some();
        let alias = match self.peek() {
            Some(tok) if explicit || is_bare_alias(tok) => match &tok.kind {
                TokenKind::Word(w) | TokenKind::QuotedIdent(w) | TokenKind::Str(w) => Some((fold(w), tok.span)),
                _ => None,
            },
            _ => None,
        };
        match alias {
            Some((name, span)) => {
                self.pos += 1;
                let span = expr.span.merge(span);
                Ok(SqlNode::new(NodeKind::Alias, span).with_content(name).with_children(vec![expr]))
            }
            None if explicit => Err(ParseError::syntax(self.here(), "expected alias after AS")),
            None => Ok(expr),
        }
    }

    fn table_source(&mut self) -> Result<SqlNode, ParseError> {
        let here = self.here();
        let mut node = if self.at_symbol("(") {
            if !self.peek_at(1).is_some_and(|t| t.is_keyword("SELECT")) {
                return Err(ParseError::unsupported(here, "parenthesized join"));
            }
            let open = self.expect_symbol("(")?;
            let query = self.query()?;
            let close = self.expect_symbol(")")?;
            SqlNode::new(NodeKind::Subquery, open.merge(close)).with_children(vec![query])
        } else {
            let ident = self.identifier(IdentRole::TableName)?;
            if self.at_symbol(".") {
                return Err(ParseError::unsupported(here, "schema-qualified table"));
            }
            if self.at_symbol("(") {
                return Err(ParseError::unsupported(here, "table-valued function"));
            }
            let name = ident.content.clone().unwrap_or_default();
            SqlNode::new(NodeKind::Table, ident.span).with_content(name).with_children(vec![ident])
        };
        let explicit = self.eat_keyword("AS").is_some();
        let alias = match self.peek() {
            Some(tok) if explicit || is_bare_alias(tok) => match &tok.kind {
                TokenKind::Word(w) | TokenKind::QuotedIdent(w) => Some((fold(w), tok.span)),
                _ => None,
            },
            _ => None,
        };
        if let Some((name, span)) = alias {
            self.pos += 1;
            node.span = node.span.merge(span);
            node.children.push(SqlNode::new(NodeKind::TableAlias, span).with_content(name));
        } else if explicit {
            return Err(ParseError::syntax(self.here(), "expected alias after AS"));
        }
        self.reject_keywords(&["INDEXED"], "index hint")?;
        Ok(node)
    }

    fn join(&mut self) -> Result<Option<SqlNode>, ParseError> {
        let start = self.here();
        if self.eat_symbol(",") {
            let source = self.table_source()?;
            let span = Span::new(start, source.span.end);
            return Ok(Some(SqlNode::new(NodeKind::Join, span).with_content("CROSS").with_children(vec![source])));
        }
        let natural = self.eat_keyword("NATURAL").is_some();
        let kind = if self.eat_keyword("LEFT").is_some() {
            self.eat_keyword("OUTER");
            "LEFT"
        } else if self.eat_keyword("RIGHT").is_some() {
            self.eat_keyword("OUTER");
            "RIGHT"
        } else if self.eat_keyword("FULL").is_some() {
            self.eat_keyword("OUTER");
            "FULL"
        } else if self.eat_keyword("INNER").is_some() {
            "INNER"
        } else if self.eat_keyword("CROSS").is_some() {
            "CROSS"
        } else {
            "INNER"
        };
        let consumed_modifier = self.here() != start;
        if self.eat_keyword("JOIN").is_none() {
            if consumed_modifier || natural {
                return Err(ParseError::syntax(self.here(), "expected JOIN"));
            }
            return Ok(None);
        }
        let source = self.table_source()?;
        let mut children = vec![source];
        if self.eat_keyword("ON").is_some() {
            children.push(self.expr()?);
        } else if let Some(kw) = self.eat_keyword("USING") {
            self.expect_symbol("(")?;
            let mut cols = Vec::new();
            loop {
                let ident = self.identifier(IdentRole::ColumnName)?;
                let name = ident.content.clone().unwrap_or_default();
                cols.push(SqlNode::new(NodeKind::Column, ident.span).with_content(name).with_children(vec![ident]));
                if !self.eat_symbol(",") {
                    break;
                }
            }
            let close = self.expect_symbol(")")?;
            children.push(SqlNode::new(NodeKind::Other(OtherTag::Using), kw.merge(close)).with_children(cols));
        }
        let content = if natural { alloc::format!("NATURAL {kind}") } else { kind.to_string() };
        let span = children.iter().fold(Span::new(start, start), |s, c| s.merge(c.span));
        Ok(Some(SqlNode::new(NodeKind::Join, span).with_content(content).with_children(children)))
    }

    fn order_by(&mut self) -> Result<Option<SqlNode>, ParseError> {
        let Some(kw) = self.eat_keyword("ORDER") else {
            return Ok(None);
        };
        self.expect_keyword("BY")?;
        let mut items = Vec::new();
        loop {
            let expr = self.expr()?;
            let mut span = expr.span;
            let direction = if let Some(s) = self.eat_keyword("DESC") {
                span = span.merge(s);
                "DESC"
            } else {
                if let Some(s) = self.eat_keyword("ASC") {
                    span = span.merge(s);
                }
                "ASC"
            };
            self.reject_keywords(&["NULLS"], "NULLS FIRST/LAST")?;
            items.push(SqlNode::new(NodeKind::Ordered, span).with_content(direction).with_children(vec![expr]));
            if !self.eat_symbol(",") {
                break;
            }
        }
        let span = items.iter().fold(kw, |s, c| s.merge(c.span));
        Ok(Some(SqlNode::new(NodeKind::OrderBy, span).with_children(items)))
    }

    fn limit(&mut self) -> Result<Option<SqlNode>, ParseError> {
        let Some(kw) = self.eat_keyword("LIMIT") else {
            return Ok(None);
        };
        let first = self.expr()?;
        let (count, offset) = if self.eat_keyword("OFFSET").is_some() {
            (first, Some(self.expr()?))
        } else if self.eat_symbol(",") {
            let count = self.expr()?;
            (count, Some(first))
        } else {
            (first, None)
        };
        let mut span = kw.merge(count.span);
        let mut children = vec![count];
        if let Some(off) = offset {
            span = span.merge(off.span);
            children.push(SqlNode::new(NodeKind::Other(OtherTag::Offset), off.span).with_children(vec![off]));
        }
        Ok(Some(SqlNode::new(NodeKind::Limit, span).with_children(children)))
    }

    fn expr_list(&mut self) -> Result<Vec<SqlNode>, ParseError> {
        let mut out = vec![self.expr()?];
        while self.eat_symbol(",") {
            out.push(self.expr()?);
        }
        Ok(out)
    }

    fn expr(&mut self) -> Result<SqlNode, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<SqlNode, ParseError> {
        self.nary(NodeKind::Or, "OR", Self::and_expr)
    }

    fn and_expr(&mut self) -> Result<SqlNode, ParseError> {
        self.nary(NodeKind::And, "AND", Self::not_expr)
    }

    /// Flattened n-ary AND/OR. Parenthesized operands of the same operator
    /// are spliced into the list.
    fn nary(
        &mut self,
        kind: NodeKind,
        keyword: &str,
        operand: fn(&mut Self) -> Result<SqlNode, ParseError>,
    ) -> Result<SqlNode, ParseError> {
        let first = operand(self)?;
        if !self.at_keyword(keyword) {
            return Ok(first);
        }
        let mut operands = Vec::new();
        splice(kind, first, &mut operands);
        while self.eat_keyword(keyword).is_some() {
            splice(kind, operand(self)?, &mut operands);
        }
        let span = operands.iter().skip(1).fold(operands[0].span, |s, c| s.merge(c.span));
        Ok(SqlNode::new(kind, span).with_children(operands))
    }

    fn not_expr(&mut self) -> Result<SqlNode, ParseError> {
        if let Some(kw) = self.eat_keyword("NOT") {
            let inner = self.not_expr()?;
            return Ok(SqlNode::new(NodeKind::Not, kw.merge(inner.span)).with_children(vec![inner]));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<SqlNode, ParseError> {
        let mut left = self.additive()?;
        while let Some(tok) = self.peek() {
            let binary = match &tok.kind {
                TokenKind::Symbol("=") | TokenKind::Symbol("==") => Some(NodeKind::Eq),
                TokenKind::Symbol("!=") | TokenKind::Symbol("<>") => Some(NodeKind::Neq),
                TokenKind::Symbol(">") => Some(NodeKind::Gt),
                TokenKind::Symbol("<") => Some(NodeKind::Lt),
                TokenKind::Symbol(">=") => Some(NodeKind::Gte),
                TokenKind::Symbol("<=") => Some(NodeKind::Lte),
                _ => None,
            };
            if let Some(kind) = binary {
                self.pos += 1;
                let right = self.additive()?;
                left = binary_node(kind, left, right);
                continue;
            }
            if self.at_keyword("IS") {
                self.pos += 1;
                let negated = self.eat_keyword("NOT").is_some();
                let right = self.additive()?;
                left = negate_if(negated, binary_node(NodeKind::Other(OtherTag::Is), left, right));
                continue;
            }
            if let Some(kw) = self.eat_keyword("ISNULL") {
                left = is_null(left, kw, false);
                continue;
            }
            if let Some(kw) = self.eat_keyword("NOTNULL") {
                left = is_null(left, kw, true);
                continue;
            }
            let negated = self.at_keyword("NOT")
                && self
                    .peek_at(1)
                    .is_some_and(|t| ["IN", "LIKE", "GLOB", "BETWEEN", "NULL"].iter().any(|k| t.is_keyword(k)));
            if negated {
                self.pos += 1;
            }
            if let Some(kw) = self.eat_keyword("NULL") {
                left = is_null(left, kw, true);
                continue;
            }
            if self.eat_keyword("IN").is_some() {
                left = negate_if(negated, self.in_list(left)?);
                continue;
            }
            let like = if self.eat_keyword("LIKE").is_some() {
                Some(NodeKind::Like)
            } else if self.eat_keyword("GLOB").is_some() {
                Some(NodeKind::Other(OtherTag::Glob))
            } else {
                None
            };
            if let Some(kind) = like {
                let pattern = self.additive()?;
                self.reject_keywords(&["ESCAPE"], "LIKE ... ESCAPE")?;
                left = negate_if(negated, binary_node(kind, left, pattern));
                continue;
            }
            if self.eat_keyword("BETWEEN").is_some() {
                let low = self.additive()?;
                self.expect_keyword("AND")?;
                let high = self.additive()?;
                let span = left.span.merge(high.span);
                let node = SqlNode::new(NodeKind::Other(OtherTag::Between), span).with_children(vec![left, low, high]);
                left = negate_if(negated, node);
                continue;
            }
            if negated {
                return Err(ParseError::syntax(self.here(), "dangling NOT"));
            }
            break;
        }
        self.reject_keywords(&["COLLATE"], "COLLATE")?;
        Ok(left)
    }

    fn in_list(&mut self, left: SqlNode) -> Result<SqlNode, ParseError> {
        let open = self.expect_symbol("(")?;
        let mut children = vec![left];
        if self.at_keyword("SELECT") {
            let query = self.query()?;
            let close = self.expect_symbol(")")?;
            children.push(SqlNode::new(NodeKind::Subquery, open.merge(close)).with_children(vec![query]));
        } else if !self.at_symbol(")") {
            children.extend(self.expr_list()?);
            self.expect_symbol(")")?;
        } else {
            self.expect_symbol(")")?;
        }
        let end = self.tokens[self.pos - 1].span.end;
        let span = Span::new(children[0].span.start, end);
        Ok(SqlNode::new(NodeKind::In, span).with_children(children))
    }

    fn additive(&mut self) -> Result<SqlNode, ParseError> {
        let mut left = self.multiplicative()?;
        loop {
            let kind = if self.at_symbol("+") {
                NodeKind::Add
            } else if self.at_symbol("-") {
                NodeKind::Sub
            } else {
                break;
            };
            self.pos += 1;
            let right = self.multiplicative()?;
            left = binary_node(kind, left, right);
        }
        Ok(left)
    }

    fn multiplicative(&mut self) -> Result<SqlNode, ParseError> {
        let mut left = self.concat()?;
        loop {
            let kind = if self.at_symbol("*") {
                NodeKind::Mul
            } else if self.at_symbol("/") {
                NodeKind::Div
            } else if self.at_symbol("%") {
                NodeKind::Other(OtherTag::Mod)
            } else {
                break;
            };
            self.pos += 1;
            let right = self.concat()?;
            left = binary_node(kind, left, right);
        }
        Ok(left)
    }

    fn concat(&mut self) -> Result<SqlNode, ParseError> {
        let mut left = self.unary()?;
        while self.eat_symbol("||") {
            let right = self.unary()?;
            left = binary_node(NodeKind::Other(OtherTag::Concat), left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<SqlNode, ParseError> {
        let start = self.here();
        if self.eat_symbol("-") {
            let inner = self.unary()?;
            let span = Span::new(start, inner.span.end);
            return Ok(SqlNode::new(NodeKind::Other(OtherTag::Neg), span).with_children(vec![inner]));
        }
        if self.eat_symbol("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<SqlNode, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::syntax(self.here(), "unexpected end of query"));
        };
        let span = tok.span;
        match &tok.kind {
            TokenKind::Number(lexeme) => {
                self.pos += 1;
                Ok(literal(LiteralKind::Number, lexeme.to_ascii_lowercase(), span))
            }
            TokenKind::Str(value) => {
                self.pos += 1;
                let mut node = literal(LiteralKind::String, value.clone(), span);
                node.flags.quoted = true;
                Ok(node)
            }
            TokenKind::Symbol("(") => {
                if self.peek_at(1).is_some_and(|t| t.is_keyword("SELECT")) {
                    self.pos += 1;
                    let query = self.query()?;
                    let close = self.expect_symbol(")")?;
                    return Ok(SqlNode::new(NodeKind::Subquery, span.merge(close)).with_children(vec![query]));
                }
                self.pos += 1;
                let inner = self.expr()?;
                if self.at_symbol(",") {
                    return Err(ParseError::unsupported(span.start, "row value"));
                }
                let close = self.expect_symbol(")")?;
                Ok(SqlNode::new(NodeKind::Paren, span.merge(close)).with_children(vec![inner]))
            }
            TokenKind::Symbol(sym) => {
                Err(ParseError::syntax(span.start, alloc::format!("unexpected `{sym}`")))
            }
            TokenKind::Word(word) => {
                let upper = word.to_ascii_uppercase();
                match upper.as_str() {
                    "NULL" => {
                        self.pos += 1;
                        Ok(literal(LiteralKind::Null, "NULL".into(), span))
                    }
                    "TRUE" | "FALSE" => {
                        self.pos += 1;
                        Ok(literal(LiteralKind::Boolean, upper.to_ascii_lowercase(), span))
                    }
                    "CURRENT_DATE" | "CURRENT_TIME" | "CURRENT_TIMESTAMP" => {
                        self.pos += 1;
                        Ok(SqlNode::new(NodeKind::Func, span).with_content(upper))
                    }
                    "CASE" => self.case_expr(),
                    "CAST" => self.cast_expr(),
                    "EXISTS" => {
                        self.pos += 1;
                        let open = self.expect_symbol("(")?;
                        let query = self.query()?;
                        let close = self.expect_symbol(")")?;
                        let sub = SqlNode::new(NodeKind::Subquery, open.merge(close)).with_children(vec![query]);
                        Ok(SqlNode::new(NodeKind::Other(OtherTag::Exists), span.merge(close)).with_children(vec![sub]))
                    }
                    "SELECT" => Err(ParseError::syntax(span.start, "subquery must be parenthesized")),
                    _ if self.peek_at(1).is_some_and(|t| t.is_symbol("(")) => self.function(upper, span),
                    _ if RESERVED.contains(&upper.as_str()) => {
                        Err(ParseError::syntax(span.start, alloc::format!("unexpected keyword {upper}")))
                    }
                    _ => self.column_ref(),
                }
            }
            TokenKind::QuotedIdent(_) => self.column_ref(),
        }
    }

    fn column_ref(&mut self) -> Result<SqlNode, ParseError> {
        let first = self.identifier(IdentRole::ColumnName)?;
        if !self.eat_symbol(".") {
            let name = first.content.clone().unwrap_or_default();
            return Ok(SqlNode::new(NodeKind::Column, first.span).with_content(name).with_children(vec![first]));
        }
        let mut qualifier = first;
        qualifier.flags.role = Some(IdentRole::Qualifier);
        let name = self.identifier(IdentRole::ColumnName)?;
        if self.at_symbol(".") {
            return Err(ParseError::unsupported(qualifier.span.start, "schema-qualified column"));
        }
        let span = qualifier.span.merge(name.span);
        let content = name.content.clone().unwrap_or_default();
        Ok(SqlNode::new(NodeKind::Column, span).with_content(content).with_children(vec![qualifier, name]))
    }

    fn function(&mut self, name: String, name_span: Span) -> Result<SqlNode, ParseError> {
        self.pos += 1;
        self.expect_symbol("(")?;
        let kind = if AGGREGATES.contains(&name.as_str()) { NodeKind::Agg } else { NodeKind::Func };
        let mut args = Vec::new();
        if self.at_symbol("*") {
            let star = self.advance().map(|t| t.span).unwrap_or_default();
            args.push(SqlNode::new(NodeKind::Star, star));
        } else if !self.at_symbol(")") {
            if let Some(kw) = self.eat_keyword("DISTINCT") {
                let arg = self.expr()?;
                let span = kw.merge(arg.span);
                args.push(SqlNode::new(NodeKind::Other(OtherTag::Distinct), span).with_children(vec![arg]));
            } else {
                args.push(self.expr()?);
            }
            while self.eat_symbol(",") {
                args.push(self.expr()?);
            }
        }
        let close = self.expect_symbol(")")?;
        if self.at_keyword("OVER") {
            return Err(ParseError::unsupported(name_span.start, "window function"));
        }
        if self.at_keyword("FILTER") {
            return Err(ParseError::unsupported(name_span.start, "aggregate FILTER clause"));
        }
        Ok(SqlNode::new(kind, name_span.merge(close)).with_content(name).with_children(args))
    }

    fn case_expr(&mut self) -> Result<SqlNode, ParseError> {
        let start = self.expect_keyword("CASE")?;
        let mut children = Vec::new();
        if !self.at_keyword("WHEN") {
            children.push(self.expr()?);
        }
        while let Some(kw) = self.eat_keyword("WHEN") {
            let cond = self.expr()?;
            self.expect_keyword("THEN")?;
            let result = self.expr()?;
            let span = kw.merge(result.span);
            children.push(SqlNode::new(NodeKind::Other(OtherTag::When), span).with_children(vec![cond, result]));
        }
        if !children.iter().any(|c| c.kind == NodeKind::Other(OtherTag::When)) {
            return Err(ParseError::syntax(self.here(), "CASE without WHEN"));
        }
        if let Some(kw) = self.eat_keyword("ELSE") {
            let value = self.expr()?;
            children.push(SqlNode::new(NodeKind::Other(OtherTag::Else), kw.merge(value.span)).with_children(vec![value]));
        }
        let end = self.expect_keyword("END")?;
        Ok(SqlNode::new(NodeKind::Other(OtherTag::Case), start.merge(end)).with_children(children))
    }

    fn cast_expr(&mut self) -> Result<SqlNode, ParseError> {
        let start = self.expect_keyword("CAST")?;
        self.expect_symbol("(")?;
        let value = self.expr()?;
        self.expect_keyword("AS")?;
        let mut type_name = String::new();
        while let Some(tok) = self.peek() {
            match &tok.kind {
                TokenKind::Word(w) => {
                    if !type_name.is_empty() {
                        type_name.push(' ');
                    }
                    type_name.push_str(&w.to_ascii_uppercase());
                    self.pos += 1;
                }
                TokenKind::Symbol("(") => {
                    // precision arguments such as DECIMAL(10, 2)
                    while !self.at_symbol(")") {
                        if self.advance().is_none() {
                            return Err(ParseError::syntax(self.here(), "unterminated type arguments"));
                        }
                    }
                    self.pos += 1;
                }
                _ => break,
            }
        }
        if type_name.is_empty() {
            return Err(ParseError::syntax(self.here(), "expected type name"));
        }
        let end = self.expect_symbol(")")?;
        Ok(SqlNode::new(NodeKind::Other(OtherTag::Cast), start.merge(end))
            .with_content(type_name)
            .with_children(vec![value]))
    }

    fn identifier(&mut self, role: IdentRole) -> Result<SqlNode, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::syntax(self.here(), "expected identifier"));
        };
        let (raw, quoted) = match &tok.kind {
            TokenKind::Word(w) if !RESERVED.iter().any(|r| w.eq_ignore_ascii_case(r)) => (w.clone(), false),
            TokenKind::QuotedIdent(w) => (w.clone(), true),
            _ => return Err(ParseError::syntax(tok.span.start, "expected identifier")),
        };
        self.pos += 1;
        let folded = fold(&raw);
        let mut node = SqlNode::new(NodeKind::Identifier, tok.span);
        node.flags.quoted = quoted;
        node.flags.case_folded = folded != raw;
        node.flags.role = Some(role);
        node.content = Some(folded);
        Ok(node)
    }
}

fn is_name(tok: &Token) -> bool {
    match &tok.kind {
        TokenKind::Word(w) => !RESERVED.iter().any(|r| w.eq_ignore_ascii_case(r)),
        TokenKind::QuotedIdent(_) => true,
        _ => false,
    }
}

fn is_bare_alias(tok: &Token) -> bool {
    is_name(tok)
}

fn fold(text: &str) -> String {
    text.to_lowercase()
}

fn literal(kind: LiteralKind, content: String, span: Span) -> SqlNode {
    let mut node = SqlNode::new(NodeKind::Literal, span).with_content(content);
    node.flags.literal = Some(kind);
    node
}

fn binary_node(kind: NodeKind, left: SqlNode, right: SqlNode) -> SqlNode {
    let span = left.span.merge(right.span);
    SqlNode::new(kind, span).with_children(vec![left, right])
}

fn negate_if(negated: bool, node: SqlNode) -> SqlNode {
    if negated {
        SqlNode::new(NodeKind::Not, node.span).with_children(vec![node])
    } else {
        node
    }
}

fn is_null(left: SqlNode, kw: Span, negated: bool) -> SqlNode {
    let null = literal(LiteralKind::Null, "NULL".into(), kw);
    negate_if(negated, binary_node(NodeKind::Other(OtherTag::Is), left, null))
}

fn splice(kind: NodeKind, node: SqlNode, out: &mut Vec<SqlNode>) {
    if node.kind == kind {
        out.extend(node.children);
        return;
    }
    if node.kind == NodeKind::Paren && node.children.first().is_some_and(|c| c.kind == kind) {
        for inner in node.children {
            out.extend(inner.children);
        }
        return;
    }
    out.push(node);
}
