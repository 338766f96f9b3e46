use rand::Rng;

/// Fixed-capacity ring buffer; once full, the oldest entry is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    cursor: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.cursor] = item;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = T>) {
        for item in items {
            self.push(item);
        }
    }

    /// Uniform draw with replacement.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, batch_size: usize, rng: &mut R) -> Vec<&'a T> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..batch_size)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect()
    }

    /// Contents from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.items[split..].iter().chain(&self.items[..split])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn overwrites_oldest_and_keeps_order(capacity in 1usize..40, extra in 0usize..100) {
            let mut buf = ReplayBuffer::new(capacity);
            buf.extend(0..capacity + extra);
            prop_assert_eq!(buf.len(), capacity);
            let kept: Vec<usize> = buf.iter_oldest_first().copied().collect();
            let expected: Vec<usize> = (extra..capacity + extra).collect();
            prop_assert_eq!(kept, expected);
        }
    }

    #[test]
    fn partial_fill_and_sampling() {
        let mut buf = ReplayBuffer::new(10);
        buf.extend(0..4);
        assert_eq!(buf.iter_oldest_first().copied().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = buf.sample(100, &mut rng);
        assert_eq!(s.len(), 100);
        assert!(s.iter().all(|&&v| v < 4));
        assert!(ReplayBuffer::<u8>::new(3).sample(5, &mut rng).is_empty());
    }
}
