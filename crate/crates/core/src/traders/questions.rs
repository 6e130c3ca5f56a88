use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::TraderError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: u32,
    #[serde(with = "hex::serde")]
    pub payload: Vec<u8>,
}

/// An ordered list of questions with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Question>", into = "Vec<Question>")]
pub struct QuestionSet {
    questions: Vec<Question>,
}

impl TryFrom<Vec<Question>> for QuestionSet {
    type Error = TraderError;
    fn try_from(v: Vec<Question>) -> Result<Self, Self::Error> {
        QuestionSet::new(v)
    }
}

impl From<QuestionSet> for Vec<Question> {
    fn from(q: QuestionSet) -> Self {
        q.questions
    }
}

impl QuestionSet {
    pub fn new(questions: Vec<Question>) -> Result<Self, TraderError> {
        if questions.len() < 2 {
            return Err(TraderError::TooFewQuestions(questions.len()));
        }
        let mut seen = HashSet::new();
        if let Some(q) = questions.iter().find(|q| !seen.insert(q.id)) {
            return Err(TraderError::DuplicateQuestion(q.id));
        }
        Ok(QuestionSet { questions })
    }

    /// Questions `0..n` with generated text payloads.
    pub fn numbered(n: usize) -> Result<Self, TraderError> {
        QuestionSet::new(
            (0..n as u32)
                .map(|id| Question { id, payload: format!("question {id}").into_bytes() })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn ids(&self) -> Vec<u32> {
        self.questions.iter().map(|q| q.id).collect()
    }

    /// Position `k` of the result holds question `order[k]`.
    pub fn permuted(&self, order: &QuestionOrder) -> Result<Self, TraderError> {
        if order.len() != self.len() {
            return Err(TraderError::OrderLength(order.len(), self.len()));
        }
        Ok(QuestionSet { questions: order.0.iter().map(|&i| self.questions[i].clone()).collect() })
    }

    /// `N | (id | len | payload)*`, integers big-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.len() as u32).to_be_bytes());
        for q in &self.questions {
            out.extend_from_slice(&q.id.to_be_bytes());
            out.extend_from_slice(&(q.payload.len() as u32).to_be_bytes());
            out.extend_from_slice(&q.payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TraderError> {
        let mut r = Reader(bytes);
        let n = r.u32()? as usize;
        let mut questions = Vec::with_capacity(n.min(bytes.len()));
        for _ in 0..n {
            let id = r.u32()?;
            let len = r.u32()? as usize;
            questions.push(Question { id, payload: r.take(len)?.to_vec() });
        }
        if !r.0.is_empty() {
            return Err(TraderError::Malformed("trailing bytes after question set"));
        }
        QuestionSet::new(questions)
    }
}

pub(crate) struct Reader<'a>(pub &'a [u8]);

impl<'a> Reader<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], TraderError> {
        if self.0.len() < n {
            return Err(TraderError::Malformed("truncated input"));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8, TraderError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, TraderError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    pub fn i64(&mut self) -> Result<i64, TraderError> {
        Ok(i64::from_be_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }
}

/// A permutation of `0..N`: position `k` receives question `order[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct QuestionOrder(Vec<usize>);

impl TryFrom<Vec<usize>> for QuestionOrder {
    type Error = TraderError;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        QuestionOrder::new(v)
    }
}

impl From<QuestionOrder> for Vec<usize> {
    fn from(o: QuestionOrder) -> Self {
        o.0
    }
}

impl QuestionOrder {
    pub fn new(order: Vec<usize>) -> Result<Self, TraderError> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            match seen.get_mut(i) {
                Some(s) if !*s => *s = true,
                _ => return Err(TraderError::NotAPermutation),
            }
        }
        Ok(QuestionOrder(order))
    }

    pub fn identity(n: usize) -> Self {
        QuestionOrder((0..n).collect())
    }

    /// Uniform permutation by Fisher-Yates.
    pub fn random<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        QuestionOrder(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;

    #[test]
    fn validation() {
        assert_eq!(QuestionSet::numbered(1), Err(TraderError::TooFewQuestions(1)));
        let q = |id| Question { id, payload: vec![] };
        assert_eq!(QuestionSet::new(vec![q(3), q(3)]), Err(TraderError::DuplicateQuestion(3)));
        assert_eq!(QuestionOrder::new(vec![0, 0]), Err(TraderError::NotAPermutation));
        assert_eq!(QuestionOrder::new(vec![0, 2]), Err(TraderError::NotAPermutation));
    }

    #[test]
    fn permutation_and_bytes_roundtrip() {
        let q = QuestionSet::numbered(5).unwrap();
        let o = QuestionOrder::new(vec![4, 2, 0, 1, 3]).unwrap();
        let p = q.permuted(&o).unwrap();
        assert_eq!(p.ids(), vec![4, 2, 0, 1, 3]);
        assert_eq!(QuestionSet::from_bytes(&p.to_bytes()).unwrap(), p);
        let mut bytes = p.to_bytes();
        bytes.push(0);
        assert!(QuestionSet::from_bytes(&bytes).is_err());
        assert!(QuestionSet::from_bytes(&bytes[..7]).is_err());
    }

    #[test]
    fn seeded_orders_reproduce() {
        let a = QuestionOrder::random(2, &mut ChaCha20Rng::seed_from_u64(9));
        let b = QuestionOrder::random(2, &mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn random_orders_are_bijections(n in 2usize..40, seed in any::<u64>()) {
            let o = QuestionOrder::random(n, &mut ChaCha20Rng::seed_from_u64(seed));
            prop_assert!(QuestionOrder::new(o.as_slice().to_vec()).is_ok());
        }
    }
}
