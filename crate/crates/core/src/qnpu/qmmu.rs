//! Quantum memory management: virtual-to-physical qubit translation and
//! ownership transfer. Physical addresses are node-local.

use super::process::Pid;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QmmuError {
    #[error("no free physical qubit")]
    OutOfQubits,
    #[error("virtual qubit {virt} of pid {pid} has no mapping")]
    TranslateMiss { pid: Pid, virt: u32 },
    #[error("physical qubit {phys} not owned by pid {pid}")]
    NotOwner { pid: Pid, phys: usize },
    #[error("virtual qubit {virt} already mapped for pid {pid}")]
    AlreadyMapped { pid: Pid, virt: u32 },
}

#[derive(Debug)]
pub struct Qmmu {
    owner: Vec<Option<(Pid, u32)>>,
}

impl Qmmu {
    pub fn new(num_qubits: usize) -> Qmmu {
        Qmmu { owner: vec![None; num_qubits] }
    }

    pub fn num_qubits(&self) -> usize {
        self.owner.len()
    }

    pub fn free_count(&self) -> usize {
        self.owner.iter().filter(|o| o.is_none()).count()
    }

    pub fn owner_of(&self, phys: usize) -> Option<Pid> {
        self.owner[phys].map(|(pid, _)| pid)
    }

    pub fn alloc(&mut self, pid: Pid, virt: u32) -> Result<usize, QmmuError> {
        if self.translate(pid, virt).is_ok() {
            return Err(QmmuError::AlreadyMapped { pid, virt });
        }
        let phys = self
            .owner
            .iter()
            .position(|o| o.is_none())
            .ok_or(QmmuError::OutOfQubits)?;
        self.owner[phys] = Some((pid, virt));
        Ok(phys)
    }

    pub fn translate(&self, pid: Pid, virt: u32) -> Result<usize, QmmuError> {
        self.owner
            .iter()
            .position(|o| *o == Some((pid, virt)))
            .ok_or(QmmuError::TranslateMiss { pid, virt })
    }

    pub fn free(&mut self, pid: Pid, virt: u32) -> Result<usize, QmmuError> {
        let phys = self.translate(pid, virt)?;
        self.owner[phys] = None;
        Ok(phys)
    }

    /// Re-homes a physical qubit to another process under a new virtual
    /// address. The quantum state is untouched.
    pub fn transfer(
        &mut self,
        from: Pid,
        to: Pid,
        phys: usize,
        new_virt: u32,
    ) -> Result<(), QmmuError> {
        match self.owner[phys] {
            Some((p, _)) if p == from => {
                if self.translate(to, new_virt).is_ok() {
                    return Err(QmmuError::AlreadyMapped { pid: to, virt: new_virt });
                }
                self.owner[phys] = Some((to, new_virt));
                Ok(())
            }
            _ => Err(QmmuError::NotOwner { pid: from, phys }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alloc_exhaustion_on_single_qubit_device() {
        let mut q = Qmmu::new(1);
        assert_eq!(q.alloc(1, 0).unwrap(), 0);
        assert_eq!(q.alloc(2, 0), Err(QmmuError::OutOfQubits));
    }

    #[test]
    fn free_then_alloc_reuses_the_address() {
        let mut q = Qmmu::new(1);
        let phys = q.alloc(1, 0).unwrap();
        q.free(1, 0).unwrap();
        assert_eq!(q.alloc(2, 7).unwrap(), phys);
    }

    #[test]
    fn transfer_rehomes_ownership() {
        let mut q = Qmmu::new(2);
        let phys = q.alloc(1, 0).unwrap();
        q.transfer(1, 2, phys, 3).unwrap();
        assert_eq!(q.translate(2, 3).unwrap(), phys);
        assert!(q.translate(1, 0).is_err());
        assert_eq!(q.owner_of(phys), Some(2));
    }

    #[test]
    fn transfer_requires_ownership() {
        let mut q = Qmmu::new(2);
        let phys = q.alloc(1, 0).unwrap();
        assert_eq!(
            q.transfer(2, 3, phys, 0),
            Err(QmmuError::NotOwner { pid: 2, phys })
        );
    }

    #[test]
    fn translate_miss() {
        let q = Qmmu::new(1);
        assert_eq!(q.translate(0, 0), Err(QmmuError::TranslateMiss { pid: 0, virt: 0 }));
    }

    #[test]
    fn at_most_one_owner_per_qubit() {
        let mut q = Qmmu::new(2);
        q.alloc(1, 0).unwrap();
        q.alloc(1, 1).unwrap();
        assert_eq!(q.free_count(), 0);
        assert_eq!(q.alloc(1, 2), Err(QmmuError::OutOfQubits));
    }
}
