use crate::bbox::BoundingBox;

/// Parse the first well-formed `[[a, b, c, d], ...]` list found in `answer`.
///
/// Numbers may be integers or decimals. Entries with the wrong arity or an
/// invalid extent are dropped one by one; an absent list yields no boxes.
pub fn parse_boxes(answer: &str) -> Vec<BoundingBox> {
    let bytes = answer.as_bytes();
    for (start, &b) in bytes.iter().enumerate() {
        if b != b'[' {
            continue;
        }
        if let Some(entries) = ListScanner::new(bytes, start).outer_list() {
            return entries
                .into_iter()
                .filter_map(|e| match e.as_slice() {
                    &[x0, y0, x1, y1] => BoundingBox::new(x0, y0, x1, y1).ok(),
                    _ => None,
                })
                .collect();
        }
    }
    Vec::new()
}

struct ListScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ListScanner<'a> {
    fn new(bytes: &'a [u8], pos: usize) -> Self {
        Self { bytes, pos }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, byte: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// `[` inner (`,` inner)* `]`, requiring at least one inner list.
    fn outer_list(&mut self) -> Option<Vec<Vec<f64>>> {
        if !self.eat(b'[') {
            return None;
        }
        let mut entries = vec![self.inner_list()?];
        loop {
            if self.eat(b']') {
                return Some(entries);
            }
            if !self.eat(b',') {
                return None;
            }
            entries.push(self.inner_list()?);
        }
    }

    fn inner_list(&mut self) -> Option<Vec<f64>> {
        if !self.eat(b'[') {
            return None;
        }
        let mut values = Vec::new();
        if self.eat(b']') {
            return Some(values);
        }
        loop {
            values.push(self.number()?);
            if self.eat(b']') {
                return Some(values);
            }
            if !self.eat(b',') {
                return None;
            }
        }
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'-' | b'+')) {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit() || b == b'.') {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return None;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'-' | b'+')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = mark;
            }
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()?.parse::<f64>().ok().filter(|v| v.is_finite())
    }
}
