/// Binary max-heap over variable indices keyed by an external activity array.
#[derive(Default, Clone)]
pub(crate) struct VarHeap {
    heap: Vec<u32>,
    position: Vec<Option<u32>>,
}

impl VarHeap {
    pub fn grow(&mut self, n: usize) {
        if self.position.len() < n {
            self.position.resize(n, None);
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.position[v].is_some()
    }

    pub fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v as u32);
        let i = self.heap.len() - 1;
        self.position[v] = Some(i as u32);
        self.sift_up(i, act);
    }

    /// Restores heap order after the activity of `v` increased.
    pub fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.position[v] {
            self.sift_up(i as usize, act);
        }
    }

    pub fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("nonempty");
        self.position[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.position[last as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top as usize)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.position[p as usize] = Some(i as u32);
            i = parent;
        }
        self.heap[i] = v;
        self.position[v as usize] = Some(i as u32);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let left = 2 * i + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let child = if right < n && act[self.heap[right] as usize] > act[self.heap[left] as usize]
            {
                right
            } else {
                left
            };
            let c = self.heap[child];
            if act[c as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = c;
            self.position[c as usize] = Some(i as u32);
            i = child;
        }
        self.heap[i] = v;
        self.position[v as usize] = Some(i as u32);
    }
}
